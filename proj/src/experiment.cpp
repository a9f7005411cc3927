#include "sscr/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <set>

#include "json.hpp"
#include "sscr/checkpoint.hpp"
#include "sscr/render.hpp"
#include "sscr/reporting.hpp"

namespace sscr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  if (!j.is_object()) throw ConfigError("config section '" + where + "' must be an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed) {
      if (item.key() == k) known = true;
    }
    if (!known) throw ConfigError("unknown config key '" + item.key() + "' in " + where);
  }
}

template <typename T>
void read_field(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + std::string(key) + "' in " + where + ": " + e.what());
  }
}

json dataset_to_json(const DatasetConfig& d) {
  return {{"train", d.train}, {"val", d.val},   {"test", d.test},
          {"turns", d.turns}, {"seed", d.seed}};
}

json editor_to_json(const EditorConfig& e) {
  return {{"embed_dim", e.embed_dim},     {"instr_hidden", e.instr_hidden},
          {"history_dim", e.history_dim}, {"feat_dim", e.feat_dim},
          {"pos_dim", e.pos_dim},         {"gen_hidden", e.gen_hidden},
          {"disc_hidden", e.disc_hidden}};
}

json explainer_to_json(const ExplainerConfig& e) {
  return {{"embed_dim", e.embed_dim},     {"instr_hidden", e.instr_hidden},
          {"history_dim", e.history_dim}, {"feat_dim", e.feat_dim},
          {"pos_dim", e.pos_dim},         {"mem_dim", e.mem_dim},
          {"dec_hidden", e.dec_hidden},   {"max_len", e.max_len}};
}

json pretrain_to_json(const PretrainConfig& p) {
  return {{"epochs", p.epochs},
          {"lr", p.lr},
          {"decay_after", p.decay_after},
          {"decay_factor", p.decay_factor},
          {"seed", p.seed}};
}

json train_to_json(const TrainConfig& t) {
  return {{"epochs", t.epochs},
          {"lr_g", t.lr_g},
          {"lr_d", t.lr_d},
          {"lr_cf", t.lr_cf},
          {"ctc_weight", t.ctc_weight},
          {"cf_iterations", t.cf_iterations},
          {"cf_source", cf_loss_source_name(t.cf_source)},
          {"seed", t.seed},
          {"log_every", t.log_every}};
}

std::string data_file(const RunPaths& paths, const std::string& split, bool zero_shot) {
  return paths.data + "/" + (zero_shot ? "zs_" : "") + split + ".jsonl";
}

void require_file(const std::string& path, const std::string& producer) {
  if (!fs::exists(path)) {
    throw MissingPrerequisite("missing " + path + "; run " + producer + " first");
  }
}

void write_data_checksums(const RunPaths& paths) {
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(paths.data)) {
    if (entry.path().extension() == ".jsonl") names.push_back(entry.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  std::ofstream out(paths.data + "/checksums.txt", std::ios::binary);
  for (const std::string& name : names) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(file_checksum(paths.data + "/" + name)));
    out << buf << "  " << name << "\n";
  }
}

std::string eval_report_path(const RunPaths& paths, const std::string& mode, double fraction,
                             std::uint64_t seed, const std::string& split) {
  return paths.reports + "/eval_" + mode + "_" + fraction_tag(fraction) + "_s" +
         std::to_string(seed) + "_" + split + ".json";
}

void write_eval_report(const RunPaths& paths, const EvalResult& eval, const std::string& mode,
                       double fraction, std::uint64_t seed, const std::string& split,
                       const std::string& checkpoint) {
  write_metrics_report(make_metrics_report(eval, split, mode, checkpoint, seed, fraction),
                       eval_report_path(paths, mode, fraction, seed, split));
}

void write_train_curves(const RunPaths& paths, const std::string& stem,
                        const std::vector<CurveRow>& rows) {
  write_curves_csv(paths.curves + "/" + stem + ".csv", rows);
  std::vector<ChartSeries> series(4);
  series[0].name = "L_G";
  series[1].name = "L_D";
  series[2].name = "L_E";
  series[3].name = "L_E cf";
  for (const CurveRow& r : rows) {
    double x = static_cast<double>(r.iteration);
    series[0].points.emplace_back(x, r.l_g);
    series[1].points.emplace_back(x, r.l_d);
    series[2].points.emplace_back(x, r.l_e);
    series[3].points.emplace_back(x, r.l_e_cf);
  }
  write_svg_chart(paths.curves + "/" + stem + ".svg", stem, "iteration", "reported loss", series);
}

// Trains one editor in `mode` on `data`; for Sscr runs the counterfactual
// phase afterwards. Saves per-epoch rolling and final checkpoints, curves and
// the test-split report.
void run_training(const ExperimentConfig& cfg, const RunPaths& paths, TrainMode mode,
                  double fraction, std::uint64_t seed, ExplainerModel* explainer,
                  const std::vector<Episode>& data, const std::vector<Episode>& test,
                  const std::string& mode_tag) {
  EditorModel model(cfg.editor, seed);
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  const std::string stem = "editor_" + mode_tag + "_" + fraction_tag(fraction) + "_s" +
                           std::to_string(seed);
  const std::string rolling = paths.checkpoints + "/" + stem + "_latest.bin";
  auto save_rolling = [&](int) {
    save_checkpoint(rolling, {{"generator", &model.generator_store()},
                              {"discriminator", &model.discriminator_store()}});
  };
  TrainStats stats = train_editor(model, explainer, data, mode, tc, save_rolling);
  if (mode == TrainMode::Sscr) counterfactual_phase(model, explainer, data, tc, stats);

  const std::string final_path = paths.checkpoints + "/" + stem + ".bin";
  save_checkpoint(final_path, {{"generator", &model.generator_store()},
                               {"discriminator", &model.discriminator_store()}});
  write_train_curves(paths, "train_" + mode_tag + "_" + fraction_tag(fraction) + "_s" +
                                std::to_string(seed),
                     stats.curves);
  write_eval_report(paths, evaluate_editor(model, test), mode_tag, fraction, seed, "test",
                    stem + ".bin");
}

struct SummaryRow {
  MetricsReport report;
  std::string file;
};

std::vector<SummaryRow> load_eval_reports(const RunPaths& paths) {
  std::vector<std::string> names;
  if (fs::exists(paths.reports)) {
    for (const auto& entry : fs::directory_iterator(paths.reports)) {
      std::string name = entry.path().filename().string();
      if (name.rfind("eval_", 0) == 0 && entry.path().extension() == ".json") {
        names.push_back(name);
      }
    }
  }
  std::sort(names.begin(), names.end());
  std::vector<SummaryRow> rows;
  for (const std::string& name : names) {
    rows.push_back({read_metrics_report(paths.reports + "/" + name), name});
  }
  return rows;
}

// Per-seed metric vectors for one (mode, fraction, split) cell, ordered by seed.
std::vector<double> cell_values(const std::vector<SummaryRow>& rows, const std::string& mode,
                                double fraction, const std::string& split,
                                double EpisodeEval::*unused, bool relsim_metric) {
  (void)unused;
  std::vector<std::pair<std::uint64_t, double>> found;
  for (const SummaryRow& r : rows) {
    if (r.report.mode == mode && r.report.split == split &&
        std::fabs(r.report.fraction - fraction) < 1e-9) {
      found.emplace_back(r.report.seed, relsim_metric ? r.report.relsim : r.report.objects.f1);
    }
  }
  std::sort(found.begin(), found.end());
  std::vector<double> out;
  for (auto& [s, v] : found) out.push_back(v);
  return out;
}

}  // namespace

std::string fraction_tag(double fraction) {
  return "f" + std::to_string(static_cast<int>(std::lround(fraction * 100)));
}

std::string editor_checkpoint_name(TrainMode mode, double fraction, std::uint64_t seed) {
  return std::string("editor_") + train_mode_name(mode) + "_" + fraction_tag(fraction) + "_s" +
         std::to_string(seed) + ".bin";
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed config " + path + ": " + e.what());
  }

  check_keys(j,
             {"out_dir", "dataset", "editor", "explainer", "pretrain", "train", "seeds",
              "fractions", "cf_iteration_caps"},
             "config");
  ExperimentConfig cfg;
  read_field(j, "out_dir", cfg.out_dir, "config");
  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    check_keys(d, {"train", "val", "test", "turns", "seed"}, "dataset");
    read_field(d, "train", cfg.dataset.train, "dataset");
    read_field(d, "val", cfg.dataset.val, "dataset");
    read_field(d, "test", cfg.dataset.test, "dataset");
    read_field(d, "turns", cfg.dataset.turns, "dataset");
    read_field(d, "seed", cfg.dataset.seed, "dataset");
  }
  if (j.contains("editor")) {
    const json& e = j.at("editor");
    check_keys(e,
               {"embed_dim", "instr_hidden", "history_dim", "feat_dim", "pos_dim", "gen_hidden",
                "disc_hidden"},
               "editor");
    read_field(e, "embed_dim", cfg.editor.embed_dim, "editor");
    read_field(e, "instr_hidden", cfg.editor.instr_hidden, "editor");
    read_field(e, "history_dim", cfg.editor.history_dim, "editor");
    read_field(e, "feat_dim", cfg.editor.feat_dim, "editor");
    read_field(e, "pos_dim", cfg.editor.pos_dim, "editor");
    read_field(e, "gen_hidden", cfg.editor.gen_hidden, "editor");
    read_field(e, "disc_hidden", cfg.editor.disc_hidden, "editor");
  }
  if (j.contains("explainer")) {
    const json& e = j.at("explainer");
    check_keys(e,
               {"embed_dim", "instr_hidden", "history_dim", "feat_dim", "pos_dim", "mem_dim",
                "dec_hidden", "max_len"},
               "explainer");
    read_field(e, "embed_dim", cfg.explainer.embed_dim, "explainer");
    read_field(e, "instr_hidden", cfg.explainer.instr_hidden, "explainer");
    read_field(e, "history_dim", cfg.explainer.history_dim, "explainer");
    read_field(e, "feat_dim", cfg.explainer.feat_dim, "explainer");
    read_field(e, "pos_dim", cfg.explainer.pos_dim, "explainer");
    read_field(e, "mem_dim", cfg.explainer.mem_dim, "explainer");
    read_field(e, "dec_hidden", cfg.explainer.dec_hidden, "explainer");
    read_field(e, "max_len", cfg.explainer.max_len, "explainer");
  }
  if (j.contains("pretrain")) {
    const json& p = j.at("pretrain");
    check_keys(p, {"epochs", "lr", "decay_after", "decay_factor", "seed"}, "pretrain");
    read_field(p, "epochs", cfg.pretrain.epochs, "pretrain");
    read_field(p, "lr", cfg.pretrain.lr, "pretrain");
    read_field(p, "decay_after", cfg.pretrain.decay_after, "pretrain");
    read_field(p, "decay_factor", cfg.pretrain.decay_factor, "pretrain");
    read_field(p, "seed", cfg.pretrain.seed, "pretrain");
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    check_keys(t,
               {"epochs", "lr_g", "lr_d", "lr_cf", "ctc_weight", "cf_iterations", "cf_source",
                "seed", "log_every"},
               "train");
    read_field(t, "epochs", cfg.train.epochs, "train");
    read_field(t, "lr_g", cfg.train.lr_g, "train");
    read_field(t, "lr_d", cfg.train.lr_d, "train");
    read_field(t, "lr_cf", cfg.train.lr_cf, "train");
    read_field(t, "ctc_weight", cfg.train.ctc_weight, "train");
    read_field(t, "cf_iterations", cfg.train.cf_iterations, "train");
    if (t.contains("cf_source")) {
      std::string s;
      read_field(t, "cf_source", s, "train");
      try {
        cfg.train.cf_source = cf_loss_source_from_name(s);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
    read_field(t, "seed", cfg.train.seed, "train");
    read_field(t, "log_every", cfg.train.log_every, "train");
  }
  read_field(j, "seeds", cfg.seeds, "config");
  read_field(j, "fractions", cfg.fractions, "config");
  read_field(j, "cf_iteration_caps", cfg.cf_iteration_caps, "config");

  validate_config(cfg);
  return cfg;
}

void save_experiment_config(const ExperimentConfig& cfg, const std::string& path) {
  json j{{"out_dir", cfg.out_dir},
         {"dataset", dataset_to_json(cfg.dataset)},
         {"editor", editor_to_json(cfg.editor)},
         {"explainer", explainer_to_json(cfg.explainer)},
         {"pretrain", pretrain_to_json(cfg.pretrain)},
         {"train", train_to_json(cfg.train)},
         {"seeds", cfg.seeds},
         {"fractions", cfg.fractions},
         {"cf_iteration_caps", cfg.cf_iteration_caps}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

void validate_config(const ExperimentConfig& cfg) {
  auto positive = [](long v, const char* what) {
    if (v <= 0) throw ConfigError(std::string(what) + " must be positive");
  };
  positive(cfg.dataset.train, "dataset.train");
  positive(cfg.dataset.val, "dataset.val");
  positive(cfg.dataset.test, "dataset.test");
  positive(cfg.dataset.turns, "dataset.turns");
  positive(cfg.editor.embed_dim, "editor.embed_dim");
  positive(cfg.editor.instr_hidden, "editor.instr_hidden");
  positive(cfg.editor.history_dim, "editor.history_dim");
  positive(cfg.editor.feat_dim, "editor.feat_dim");
  positive(cfg.editor.pos_dim, "editor.pos_dim");
  positive(cfg.editor.gen_hidden, "editor.gen_hidden");
  positive(cfg.editor.disc_hidden, "editor.disc_hidden");
  positive(cfg.explainer.max_len, "explainer.max_len");
  positive(cfg.pretrain.epochs, "pretrain.epochs");
  positive(cfg.train.epochs, "train.epochs");
  positive(cfg.train.log_every, "train.log_every");
  if (cfg.explainer.instruction_dim() != cfg.explainer.feat_dim ||
      cfg.explainer.history_dim != cfg.explainer.feat_dim) {
    throw ConfigError("explainer feat_dim, history_dim and 2*instr_hidden must agree");
  }
  if (cfg.pretrain.lr <= 0 || cfg.train.lr_g <= 0 || cfg.train.lr_d <= 0 || cfg.train.lr_cf <= 0) {
    throw ConfigError("learning rates must be positive");
  }
  if (cfg.train.cf_iterations < 0) throw ConfigError("train.cf_iterations must be >= 0");
  if (cfg.seeds.empty()) throw ConfigError("seeds must be nonempty");
  if (cfg.fractions.empty()) throw ConfigError("fractions must be nonempty");
  for (double f : cfg.fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("fractions must lie in (0, 1]");
  }
  if (cfg.cf_iteration_caps.empty()) throw ConfigError("cf_iteration_caps must be nonempty");
  for (size_t i = 0; i < cfg.cf_iteration_caps.size(); ++i) {
    if (cfg.cf_iteration_caps[i] < 0) throw ConfigError("cf_iteration_caps must be >= 0");
    if (i > 0 && cfg.cf_iteration_caps[i] <= cfg.cf_iteration_caps[i - 1]) {
      throw ConfigError("cf_iteration_caps must be strictly increasing");
    }
  }
}

RunPaths prepare_run_dirs(const ExperimentConfig& cfg) {
  RunPaths p;
  p.root = cfg.out_dir;
  p.data = cfg.out_dir + "/data";
  p.checkpoints = cfg.out_dir + "/checkpoints";
  p.reports = cfg.out_dir + "/reports";
  p.curves = cfg.out_dir + "/curves";
  p.renders = cfg.out_dir + "/renders";
  for (const std::string& dir : {p.root, p.data, p.checkpoints, p.reports, p.curves, p.renders}) {
    fs::create_directories(dir);
  }
  save_experiment_config(cfg, p.root + "/config.json");
  return p;
}

std::uint64_t file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::uint64_t h = 1469598103934665603ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (!in) break;
  }
  return h;
}

std::vector<Episode> load_split(const RunPaths& paths, const std::string& split, bool zero_shot) {
  const std::string path = data_file(paths, split, zero_shot);
  require_file(path, zero_shot ? "gen-data --zero-shot" : "gen-data");
  return load_episodes(path);
}

EditorModel load_editor(const ExperimentConfig& cfg, const std::string& checkpoint_path) {
  require_file(checkpoint_path, "train");
  EditorModel model(cfg.editor, 0);
  load_checkpoint(checkpoint_path, {{"generator", &model.generator_store()},
                                    {"discriminator", &model.discriminator_store()}});
  return model;
}

ExplainerModel load_explainer(const ExperimentConfig& cfg, const std::string& checkpoint_path) {
  require_file(checkpoint_path, "pretrain-explainer");
  ExplainerModel model(cfg.explainer, 0);
  load_checkpoint(checkpoint_path, {{"explainer", &model.store()}});
  model.freeze();
  return model;
}

void cmd_gen_data(const ExperimentConfig& cfg, bool zero_shot) {
  RunPaths paths = prepare_run_dirs(cfg);
  const DatasetConfig& d = cfg.dataset;
  DatasetSplits splits;
  if (zero_shot) {
    splits = generate_zero_shot_data(d.train, d.val, d.test, d.turns, d.seed);
  } else {
    splits = make_splits(generate_episodes(d.train + d.val + d.test, d.turns, d.seed), d.train,
                         d.val, d.test);
  }
  save_episodes(splits.train, data_file(paths, "train", zero_shot));
  save_episodes(splits.val, data_file(paths, "val", zero_shot));
  save_episodes(splits.test, data_file(paths, "test", zero_shot));
  write_data_checksums(paths);
}

void cmd_pretrain_explainer(const ExperimentConfig& cfg, double fraction, bool zero_shot) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("fraction must lie in (0, 1]");
  RunPaths paths = prepare_run_dirs(cfg);
  std::vector<Episode> train = load_split(paths, "train", zero_shot);
  std::vector<Episode> val = load_split(paths, "val", zero_shot);
  if (fraction < 1.0) train = subsample_episodes(train, fraction, cfg.pretrain.seed);

  ExplainerModel model(cfg.explainer, cfg.pretrain.seed);
  ExplainerQuality q = pretrain_explainer(model, train, val, cfg.pretrain);

  std::string suffix = std::string(zero_shot ? "_zs" : "") +
                       (fraction < 1.0 ? "_" + fraction_tag(fraction) : "");
  save_checkpoint(paths.checkpoints + "/explainer" + suffix + ".bin",
                  {{"explainer", &model.store()}});
  write_explainer_report({q, cfg.pretrain.seed, fraction},
                         paths.reports + "/explainer_quality" + suffix + ".json");

  ChartSeries ppl{"train PPL", {}};
  for (size_t i = 0; i < q.train_ppl_per_epoch.size(); ++i) {
    ppl.points.emplace_back(static_cast<double>(i + 1), q.train_ppl_per_epoch[i]);
  }
  write_svg_chart(paths.curves + "/explainer_pretrain" + suffix + ".svg",
                  "explainer pretraining", "epoch", "perplexity", {ppl});
}

void cmd_train(const ExperimentConfig& cfg, TrainMode mode, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("fraction must lie in (0, 1]");
  RunPaths paths = prepare_run_dirs(cfg);
  std::vector<Episode> train = load_split(paths, "train", false);
  std::vector<Episode> test = load_split(paths, "test", false);
  if (fraction < 1.0) train = subsample_episodes(train, fraction, seed);

  ExplainerModel explainer(cfg.explainer, 0);
  ExplainerModel* ex = nullptr;
  if (mode != TrainMode::Baseline) {
    explainer = load_explainer(cfg, paths.checkpoints + "/explainer.bin");
    ex = &explainer;
  }
  std::string tag = train_mode_name(mode);
  if (mode == TrainMode::Sscr && cfg.train.cf_source == CfLossSource::Discriminator) {
    tag = "sscr_dcf";
  }
  run_training(cfg, paths, mode, fraction, seed, ex, train, test, tag);
}

void cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint,
              const std::string& split) {
  if (split != "train" && split != "val" && split != "test") {
    throw ConfigError("unknown split '" + split + "' (expected train, val or test)");
  }
  RunPaths paths = prepare_run_dirs(cfg);
  std::vector<Episode> episodes = load_split(paths, split, false);

  if (checkpoint == "oracle") {
    write_eval_report(paths, evaluate_oracle(episodes), "oracle", 1.0, 0, split, "oracle");
    return;
  }
  std::string path = fs::exists(checkpoint) ? checkpoint : paths.checkpoints + "/" + checkpoint;
  EditorModel model = load_editor(cfg, path);
  std::string stem = fs::path(path).stem().string();
  write_metrics_report(
      make_metrics_report(evaluate_editor(model, episodes), split, stem, path, 0, 1.0),
      paths.reports + "/eval_" + stem + "_" + split + ".json");
}

void cmd_ablate_scarcity(const ExperimentConfig& cfg) {
  RunPaths paths = prepare_run_dirs(cfg);
  std::vector<Episode> full_train = load_split(paths, "train", false);
  std::vector<Episode> test = load_split(paths, "test", false);
  ExplainerModel explainer = load_explainer(cfg, paths.checkpoints + "/explainer.bin");

  std::vector<std::vector<std::string>> rows;
  for (double fraction : cfg.fractions) {
    for (std::uint64_t seed : cfg.seeds) {
      std::vector<Episode> train = fraction < 1.0
                                       ? subsample_episodes(full_train, fraction, seed)
                                       : full_train;

      run_training(cfg, paths, TrainMode::Baseline, fraction, seed, nullptr, train, test,
                   "baseline");
      run_training(cfg, paths, TrainMode::CtcOnly, fraction, seed, &explainer, train, test,
                   "ctc");

      // Both counterfactual variants continue from the same reconstruction
      // checkpoint; the discriminator-driven one exists for the loss-source
      // ablation.
      const std::string ctc_ckpt =
          paths.checkpoints + "/" + editor_checkpoint_name(TrainMode::CtcOnly, fraction, seed);
      for (CfLossSource source : {CfLossSource::Explainer, CfLossSource::Discriminator}) {
        EditorModel model = load_editor(cfg, ctc_ckpt);
        TrainConfig tc = cfg.train;
        tc.seed = seed;
        tc.cf_source = source;
        TrainStats stats;
        counterfactual_phase(model, &explainer, train, tc, stats);
        const std::string tag = source == CfLossSource::Explainer ? "sscr" : "sscr_dcf";
        const std::string stem =
            "editor_" + tag + "_" + fraction_tag(fraction) + "_s" + std::to_string(seed);
        save_checkpoint(paths.checkpoints + "/" + stem + ".bin",
                        {{"generator", &model.generator_store()},
                         {"discriminator", &model.discriminator_store()}});
        write_train_curves(paths, "train_" + tag + "_" + fraction_tag(fraction) + "_s" +
                                      std::to_string(seed),
                           stats.curves);
        write_eval_report(paths, evaluate_editor(model, test), tag, fraction, seed, "test",
                          stem + ".bin");
      }
    }
  }

  // Deterministic summary straight from the reports just written.
  std::vector<SummaryRow> reports = load_eval_reports(paths);
  for (const SummaryRow& r : reports) {
    if (r.report.split != "test") continue;
    if (r.report.mode != "baseline" && r.report.mode != "ctc" && r.report.mode != "sscr" &&
        r.report.mode != "sscr_dcf") {
      continue;
    }
    rows.push_back({r.report.mode, format_double(r.report.fraction),
                    std::to_string(r.report.seed), format_double(r.report.objects.precision),
                    format_double(r.report.objects.recall), format_double(r.report.objects.f1),
                    format_double(r.report.relsim)});
  }
  write_csv(paths.reports + "/scarcity_summary.csv",
            {"mode", "fraction", "seed", "precision", "recall", "f1", "relsim"}, rows);

  std::vector<ChartSeries> chart;
  for (const std::string& mode : {"baseline", "ctc", "sscr"}) {
    ChartSeries s{mode, {}};
    std::vector<double> fracs = cfg.fractions;
    std::sort(fracs.begin(), fracs.end());
    for (double f : fracs) {
      std::vector<double> vals = cell_values(reports, mode, f, "test", nullptr, false);
      if (!vals.empty()) s.points.emplace_back(f, mean(vals));
    }
    chart.push_back(std::move(s));
  }
  write_svg_chart(paths.reports + "/scarcity_f1.svg", "final-turn F1 vs data fraction",
                  "training data fraction", "mean F1", chart);
}

void cmd_ablate_cf_iters(const ExperimentConfig& cfg) {
  RunPaths paths = prepare_run_dirs(cfg);
  const double fraction = *std::min_element(cfg.fractions.begin(), cfg.fractions.end());
  const std::uint64_t seed = cfg.seeds.front();
  std::vector<Episode> train = load_split(paths, "train", false);
  std::vector<Episode> val = load_split(paths, "val", false);
  if (fraction < 1.0) train = subsample_episodes(train, fraction, seed);
  ExplainerModel explainer = load_explainer(cfg, paths.checkpoints + "/explainer.bin");

  const std::string ctc_ckpt =
      paths.checkpoints + "/" + editor_checkpoint_name(TrainMode::CtcOnly, fraction, seed);
  EditorModel model = load_editor(cfg, ctc_ckpt);
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  tc.cf_source = CfLossSource::Explainer;

  TrainStats stats;
  std::vector<std::vector<std::string>> rows;
  ChartSeries f1_series{"val F1", {}};
  for (int cap : cfg.cf_iteration_caps) {
    tc.cf_iterations = cap - static_cast<int>(stats.counterfactual_steps);
    if (tc.cf_iterations > 0) counterfactual_phase(model, &explainer, train, tc, stats);
    EvalResult eval = evaluate_editor(model, val);
    rows.push_back({std::to_string(cap), format_double(eval.objects.f1),
                    format_double(eval.relsim)});
    f1_series.points.emplace_back(static_cast<double>(cap), eval.objects.f1);
  }
  write_csv(paths.reports + "/cf_iters_summary.csv", {"cf_iterations", "f1", "relsim"}, rows);
  write_svg_chart(paths.reports + "/cf_iters_f1.svg", "validation F1 vs counterfactual iterations",
                  "counterfactual iterations", "val F1", {f1_series});
}

void cmd_zero_shot(const ExperimentConfig& cfg) {
  RunPaths paths = prepare_run_dirs(cfg);
  if (!fs::exists(data_file(paths, "train", true))) cmd_gen_data(cfg, true);
  if (!fs::exists(paths.checkpoints + "/explainer_zs.bin")) {
    cmd_pretrain_explainer(cfg, 1.0, true);
  }
  std::vector<Episode> train = load_split(paths, "train", true);
  std::vector<Episode> test = load_split(paths, "test", true);
  ExplainerModel explainer = load_explainer(cfg, paths.checkpoints + "/explainer_zs.bin");

  std::vector<std::vector<std::string>> rows;
  for (std::uint64_t seed : cfg.seeds) {
    run_training(cfg, paths, TrainMode::Baseline, 1.0, seed, nullptr, train, test,
                 "zs_baseline");
    run_training(cfg, paths, TrainMode::Sscr, 1.0, seed, &explainer, train, test, "zs_sscr");
  }
  std::vector<SummaryRow> reports = load_eval_reports(paths);
  for (const SummaryRow& r : reports) {
    if (r.report.mode != "zs_baseline" && r.report.mode != "zs_sscr") continue;
    rows.push_back({r.report.mode, std::to_string(r.report.seed),
                    format_double(r.report.objects.f1), format_double(r.report.relsim)});
  }
  write_csv(paths.reports + "/zero_shot_summary.csv", {"mode", "seed", "f1", "relsim"}, rows);
}

void cmd_render(const ExperimentConfig& cfg, const std::string& checkpoint, int episodes) {
  if (episodes <= 0) throw ConfigError("episode count must be positive");
  RunPaths paths = prepare_run_dirs(cfg);
  std::vector<Episode> test = load_split(paths, "test", false);
  std::string path = fs::exists(checkpoint) ? checkpoint : paths.checkpoints + "/" + checkpoint;
  EditorModel model = load_editor(cfg, path);

  const int n = std::min<int>(episodes, static_cast<int>(test.size()));
  for (int i = 0; i < n; ++i) {
    const Episode& ep = test[static_cast<size_t>(i)];
    std::vector<Image> predicted, truth;
    Tensor h = model.initial_history();
    Tensor canvas = image_to_tensor(render(Scene{}));
    std::ofstream txt(paths.renders + "/episode_" + std::to_string(ep.id) + ".txt");
    for (const Turn& turn : ep.turns) {
      h = model.history_step(model.encode_instruction(encode_instruction(turn.text)), h)
              .detached();
      canvas = model.generate(canvas, h).detached();
      predicted.push_back(tensor_to_image(canvas));
      truth.push_back(render(turn.scene));
      txt << turn.text << "\n";
    }
    write_png_grid({predicted, truth},
                   paths.renders + "/episode_" + std::to_string(ep.id) + ".png", 4);
  }
}

void cmd_summarize(const ExperimentConfig& cfg) {
  RunPaths paths = prepare_run_dirs(cfg);
  std::vector<SummaryRow> reports = load_eval_reports(paths);

  std::vector<std::vector<std::string>> rows;
  for (const SummaryRow& r : reports) {
    rows.push_back({r.report.mode, format_double(r.report.fraction),
                    std::to_string(r.report.seed), r.report.split,
                    format_double(r.report.objects.precision),
                    format_double(r.report.objects.recall), format_double(r.report.objects.f1),
                    format_double(r.report.relsim), std::to_string(r.report.episodes)});
  }
  write_csv(paths.reports + "/summary.csv",
            {"mode", "fraction", "seed", "split", "precision", "recall", "f1", "relsim",
             "episodes"},
            rows);

  std::ofstream md(paths.reports + "/summary.md", std::ios::binary);
  md << "# Results\n\n";

  // Aggregate table over (mode, fraction) cells on the test split.
  std::set<double> fractions;
  for (const SummaryRow& r : reports) {
    if (r.report.split == "test") fractions.insert(r.report.fraction);
  }
  md << "## Scarcity grid (test split)\n\n";
  md << "| mode | fraction | seeds | F1 mean | F1 sd | RelSim mean | RelSim sd |\n";
  md << "|---|---|---|---|---|---|---|\n";
  for (const std::string& mode : {"baseline", "ctc", "sscr", "sscr_dcf"}) {
    for (double f : fractions) {
      std::vector<double> f1 = cell_values(reports, mode, f, "test", nullptr, false);
      std::vector<double> rs = cell_values(reports, mode, f, "test", nullptr, true);
      if (f1.empty()) continue;
      md << "| " << mode << " | " << format_double(f) << " | " << f1.size() << " | "
         << format_double(mean(f1)) << " | " << format_double(sample_stddev(f1)) << " | "
         << format_double(mean(rs)) << " | " << format_double(sample_stddev(rs)) << " |\n";
    }
  }
  md << "\n## Verdicts\n\n";

  auto emit_pair = [&](const std::string& label, const std::string& a, const std::string& b,
                       double fraction, bool relsim_metric) {
    std::vector<double> va = cell_values(reports, a, fraction, "test", nullptr, relsim_metric);
    std::vector<double> vb = cell_values(reports, b, fraction, "test", nullptr, relsim_metric);
    if (va.empty() || vb.empty() || va.size() != vb.size()) return;
    md << "- " << verdict_line(paired_verdict(label, va, vb)) << "\n";
  };

  for (double f : fractions) {
    emit_pair("SSCR > CTC-only (F1, fraction " + format_double(f) + ")", "sscr", "ctc", f, false);
    emit_pair("CTC-only > Baseline (F1, fraction " + format_double(f) + ")", "ctc", "baseline", f,
              false);
    emit_pair("SSCR > CTC-only (RelSim, fraction " + format_double(f) + ")", "sscr", "ctc", f,
              true);
    emit_pair("CTC-only > Baseline (RelSim, fraction " + format_double(f) + ")", "ctc",
              "baseline", f, true);
    emit_pair("CF(explainer) improves RelSim over pre-phase (fraction " + format_double(f) + ")",
              "sscr", "ctc", f, true);
    emit_pair("CF(discriminator) fails to beat pre-phase RelSim (fraction " + format_double(f) +
                  ") [expected FAIL]",
              "sscr_dcf", "ctc", f, true);
  }

  // Scarcity degradation gap: F1(full) - F1(half), sscr should shrink it.
  auto degradation = [&](const std::string& mode, std::vector<double>& out) {
    std::vector<double> full = cell_values(reports, mode, 1.0, "test", nullptr, false);
    std::vector<double> half = cell_values(reports, mode, 0.5, "test", nullptr, false);
    if (full.empty() || full.size() != half.size()) return false;
    for (size_t i = 0; i < full.size(); ++i) out.push_back(full[i] - half[i]);
    return true;
  };
  std::vector<double> drop_sscr, drop_base;
  if (degradation("sscr", drop_sscr) && degradation("baseline", drop_base)) {
    md << "- "
       << verdict_line(
              paired_verdict("Baseline degrades more than SSCR from full to 50% data (F1 drop)",
                             drop_base, drop_sscr))
       << "\n";
  }

  // Zero-shot comparison.
  {
    std::vector<double> zs_sscr = cell_values(reports, "zs_sscr", 1.0, "test", nullptr, false);
    std::vector<double> zs_base = cell_values(reports, "zs_baseline", 1.0, "test", nullptr,
                                              false);
    if (!zs_sscr.empty() && zs_sscr.size() == zs_base.size()) {
      md << "- " << verdict_line(paired_verdict("Zero-shot F1: SSCR > Baseline", zs_sscr, zs_base))
         << "\n";
    }
  }

  // Counterfactual iteration sweep: interior maximum over the caps.
  const std::string cf_csv = paths.reports + "/cf_iters_summary.csv";
  if (fs::exists(cf_csv)) {
    std::ifstream in(cf_csv);
    std::string line;
    std::getline(in, line);
    std::vector<std::pair<long, double>> pts;
    while (std::getline(in, line)) {
      size_t c1 = line.find(','), c2 = line.find(',', c1 + 1);
      if (c1 == std::string::npos || c2 == std::string::npos) continue;
      pts.emplace_back(std::stol(line.substr(0, c1)),
                       std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
    }
    if (pts.size() >= 3) {
      size_t best = 0;
      for (size_t i = 1; i < pts.size(); ++i) {
        if (pts[i].second > pts[best].second) best = i;
      }
      bool interior = best > 0 && best + 1 < pts.size() &&
                      pts.front().second < pts[best].second &&
                      pts.back().second < pts[best].second;
      md << "- Counterfactual iteration sweep has an interior F1 maximum: "
         << (interior ? "PASS" : "FAIL") << " (best at " << pts[best].first << " iterations, F1 "
         << format_double(pts[best].second) << ")\n";
    }
  }

  // Explainer quality reports.
  std::vector<std::string> exp_names;
  for (const auto& entry : fs::directory_iterator(paths.reports)) {
    std::string name = entry.path().filename().string();
    if (name.rfind("explainer_quality", 0) == 0 && entry.path().extension() == ".json") {
      exp_names.push_back(name);
    }
  }
  std::sort(exp_names.begin(), exp_names.end());
  if (!exp_names.empty()) {
    md << "\n## Explainer quality\n\n| report | PPL | BLEU-4 | token accuracy |\n|---|---|---|---|\n";
    for (const std::string& name : exp_names) {
      ExplainerReportFile r = read_explainer_report(paths.reports + "/" + name);
      md << "| " << name << " | " << format_double(r.quality.ppl) << " | "
         << format_double(r.quality.bleu) << " | " << format_double(r.quality.token_accuracy)
         << " |\n";
    }
  }
}

}  // namespace sscr
