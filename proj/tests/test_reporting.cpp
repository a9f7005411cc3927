#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "sscr/episodes.hpp"
#include "sscr/experiment.hpp"
#include "sscr/reporting.hpp"

using namespace sscr;
namespace fs = std::filesystem;

namespace {

std::string temp_dir() {
  static std::string dir = [] {
    std::string d = (fs::temp_directory_path() / "sscr_reporting_test").string();
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_CASE("doubles render compactly and NaN renders blank") {
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(-3.25) == "-3.25");
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "");
  CHECK(format_double(1.0 / 3.0) == "0.3333333333");
}

TEST_CASE("csv writing is deterministic and validates row width") {
  std::string path = temp_dir() + "/rows.csv";
  std::vector<std::vector<std::string>> rows = {{"a", "1"}, {"b", "2"}};
  write_csv(path, {"name", "value"}, rows);
  std::string first = slurp(path);
  CHECK(first == "name,value\na,1\nb,2\n");
  write_csv(path, {"name", "value"}, rows);
  CHECK(slurp(path) == first);
  CHECK_THROWS(write_csv(path, {"name"}, rows));
}

TEST_CASE("curve csv leaves unavailable losses blank") {
  std::string path = temp_dir() + "/curves.csv";
  double nan = std::numeric_limits<double>::quiet_NaN();
  write_curves_csv(path, {{25, -3.5, -1.4, 6.0, nan}, {50, nan, nan, nan, 2.5}});
  CHECK(slurp(path) ==
        "iteration,l_g,l_d,l_e,l_e_cf\n25,-3.5,-1.4,6,\n50,,,,2.5\n");
}

TEST_CASE("metrics reports round trip through json") {
  MetricsReport r;
  r.split = "val";
  r.mode = "sscr";
  r.checkpoint = "editor_sscr_f50_s2.bin";
  r.seed = 2;
  r.fraction = 0.5;
  r.objects = {0.75, 0.6, 2.0 * 0.75 * 0.6 / 1.35};
  r.relsim = 0.81;
  r.episodes = 2;
  r.per_episode = {{17, 1.0, 1.0}, {21, 0.5, 0.62}};
  std::string path = temp_dir() + "/report.json";
  write_metrics_report(r, path);
  MetricsReport back = read_metrics_report(path);
  CHECK(back.split == r.split);
  CHECK(back.mode == r.mode);
  CHECK(back.checkpoint == r.checkpoint);
  CHECK(back.seed == r.seed);
  CHECK(back.fraction == doctest::Approx(r.fraction));
  CHECK(back.objects.f1 == doctest::Approx(r.objects.f1));
  CHECK(back.relsim == doctest::Approx(r.relsim));
  CHECK(back.episodes == r.episodes);
  CHECK(back.per_episode.size() == 2);
  CHECK(back.per_episode[1].id == 21);
  CHECK(back.per_episode[1].relsim == doctest::Approx(0.62));
}

TEST_CASE("explainer report round trips") {
  ExplainerReportFile r;
  r.quality.ppl = 1.31;
  r.quality.bleu = 0.61;
  r.quality.token_accuracy = 0.9;
  r.quality.train_ppl_per_epoch = {2.4, 1.5};
  r.seed = 7;
  r.fraction = 0.5;
  std::string path = temp_dir() + "/explainer.json";
  write_explainer_report(r, path);
  ExplainerReportFile back = read_explainer_report(path);
  CHECK(back.quality.ppl == doctest::Approx(1.31));
  CHECK(back.quality.train_ppl_per_epoch.size() == 2);
  CHECK(back.seed == 7);
  CHECK(back.fraction == doctest::Approx(0.5));
}

TEST_CASE("paired verdicts compare means and count signs") {
  PairedVerdict v = paired_verdict("a beats b", {0.8, 0.7, 0.9}, {0.6, 0.75, 0.5});
  CHECK(v.pass);
  CHECK(v.wins == 2);
  CHECK(v.losses == 1);
  CHECK(v.ties == 0);
  CHECK(verdict_line(v).find("PASS") != std::string::npos);
  PairedVerdict w = paired_verdict("b beats a", {0.5, 0.5}, {0.5, 0.6});
  CHECK(!w.pass);
  CHECK(w.ties == 1);
  CHECK(verdict_line(w).find("FAIL") != std::string::npos);
}

TEST_CASE("svg charts skip gaps and carry the labels") {
  std::string path = temp_dir() + "/chart.svg";
  double nan = std::numeric_limits<double>::quiet_NaN();
  write_svg_chart(path, "losses", "iteration", "value",
                  {{"g", {{0.0, 1.0}, {1.0, nan}, {2.0, 0.5}}}, {"d", {{0.0, 0.2}}}});
  std::string svg = slurp(path);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("losses") != std::string::npos);
  CHECK(svg.find("iteration") != std::string::npos);
  CHECK(svg.find("circle") != std::string::npos);
}

TEST_CASE("experiment config round trips and rejects unknown keys") {
  ExperimentConfig cfg;
  cfg.out_dir = temp_dir() + "/run";
  cfg.dataset.train = 40;
  cfg.seeds = {4, 5};
  cfg.fractions = {1.0, 0.25};
  cfg.train.cf_source = CfLossSource::Discriminator;
  std::string path = temp_dir() + "/config.json";
  save_experiment_config(cfg, path);
  ExperimentConfig back = load_experiment_config(path);
  CHECK(back.out_dir == cfg.out_dir);
  CHECK(back.dataset.train == 40);
  CHECK(back.seeds == std::vector<std::uint64_t>{4, 5});
  CHECK(back.fractions[1] == doctest::Approx(0.25));
  CHECK(back.train.cf_source == CfLossSource::Discriminator);

  std::ofstream(temp_dir() + "/bad.json") << "{\"dataset\": {\"rows\": 3}}";
  CHECK_THROWS_AS(load_experiment_config(temp_dir() + "/bad.json"), ConfigError);
  std::ofstream(temp_dir() + "/bad2.json") << "{\"fractions\": [0.0]}";
  CHECK_THROWS_AS(load_experiment_config(temp_dir() + "/bad2.json"), ConfigError);
  std::ofstream(temp_dir() + "/bad3.json") << "{\"cf_iteration_caps\": [100, 50]}";
  CHECK_THROWS_AS(load_experiment_config(temp_dir() + "/bad3.json"), ConfigError);
  std::ofstream(temp_dir() + "/bad4.json") << "not json";
  CHECK_THROWS_AS(load_experiment_config(temp_dir() + "/bad4.json"), ConfigError);
  CHECK_THROWS_AS(load_experiment_config(temp_dir() + "/absent.json"), ConfigError);
}

TEST_CASE("artifact names encode mode, fraction and seed") {
  CHECK(fraction_tag(1.0) == "f100");
  CHECK(fraction_tag(0.5) == "f50");
  CHECK(fraction_tag(0.8) == "f80");
  CHECK(editor_checkpoint_name(TrainMode::Sscr, 0.5, 3) == "editor_sscr_f50_s3.bin");
  CHECK(editor_checkpoint_name(TrainMode::Baseline, 1.0, 1) == "editor_baseline_f100_s1.bin");
}

TEST_CASE("file checksums distinguish contents and ignore nothing") {
  std::string a = temp_dir() + "/a.txt";
  std::string b = temp_dir() + "/b.txt";
  std::ofstream(a) << "episode one\n";
  std::ofstream(b) << "episode two\n";
  CHECK(file_checksum(a) == file_checksum(a));
  CHECK(file_checksum(a) != file_checksum(b));
  std::ofstream(b) << "episode one\n";
  CHECK(file_checksum(a) == file_checksum(b));
}

TEST_CASE("run directories are created with an archived config") {
  ExperimentConfig cfg;
  cfg.out_dir = temp_dir() + "/tree";
  RunPaths paths = prepare_run_dirs(cfg);
  for (const std::string& dir :
       {paths.data, paths.checkpoints, paths.reports, paths.curves, paths.renders}) {
    CHECK(fs::is_directory(dir));
  }
  CHECK(fs::exists(paths.root + "/config.json"));
  ExperimentConfig back = load_experiment_config(paths.root + "/config.json");
  CHECK(back.out_dir == cfg.out_dir);
}
