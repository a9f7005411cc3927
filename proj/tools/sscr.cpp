#include <cstdio>
#include <exception>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "sscr/experiment.hpp"

using namespace sscr;

int main(int argc, char** argv) {
  CLI::App app{"iterative language-driven image editing testbed"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  app.add_option("--config", config_path, "experiment config JSON")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (overrides config)");
  app.fallthrough();

  bool zero_shot = false;
  double fraction = 1.0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string mode = "baseline";
  std::string checkpoint;
  std::string split = "test";
  std::string cf_loss = "explainer";
  int cf_iters = -1;
  int episodes = 8;

  CLI::App* gen = app.add_subcommand("gen-data", "generate episode splits");
  gen->add_flag("--zero-shot", zero_shot, "hold out unseen color/shape pairs");
  auto* gen_seed = gen->add_option("--seed", seed, "dataset seed");

  CLI::App* pre = app.add_subcommand("pretrain-explainer", "pretrain the frozen explainer");
  pre->add_option("--fraction", fraction, "training data fraction")->check(CLI::Range(0.0, 1.0));
  pre->add_flag("--zero-shot", zero_shot, "use the zero-shot splits");
  auto* pre_seed = pre->add_option("--seed", seed, "pretraining seed");

  CLI::App* train = app.add_subcommand("train", "train one editor");
  train->add_option("--mode", mode, "baseline, ctc or sscr");
  train->add_option("--fraction", fraction, "training data fraction")
      ->check(CLI::Range(0.0, 1.0));
  auto* seed_opt = train->add_option("--seed", seed, "model/training seed");
  train->add_option("--cf-iters", cf_iters, "counterfactual iterations (sscr)");
  train->add_option("--cf-loss", cf_loss, "explainer or discriminator");

  CLI::App* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  ev->add_option("checkpoint", checkpoint, "checkpoint file or 'oracle'")->required();
  ev->add_option("--split", split, "train, val or test");

  app.add_subcommand("ablate-scarcity", "train/eval full mode-by-fraction grid");
  app.add_subcommand("ablate-cf-iters", "sweep counterfactual iteration caps");
  app.add_subcommand("zero-shot", "baseline vs sscr on held-out compositions");

  CLI::App* render = app.add_subcommand("render", "render predicted episode strips");
  render->add_option("checkpoint", checkpoint, "editor checkpoint file")->required();
  render->add_option("--episodes", episodes, "episodes to render");

  CLI::App* summ = app.add_subcommand("summarize", "aggregate reports into summary tables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  seed_set = seed_opt->count() > 0;

  try {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = load_experiment_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;

    if (gen->parsed()) {
      if (gen_seed->count() > 0) cfg.dataset.seed = seed;
      cmd_gen_data(cfg, zero_shot);
    } else if (pre->parsed()) {
      if (pre_seed->count() > 0) cfg.pretrain.seed = seed;
      cmd_pretrain_explainer(cfg, fraction, zero_shot);
    } else if (train->parsed()) {
      TrainMode m = train_mode_from_name(mode);
      if (cf_iters >= 0) cfg.train.cf_iterations = cf_iters;
      cfg.train.cf_source = cf_loss_source_from_name(cf_loss);
      cmd_train(cfg, m, fraction, seed_set ? seed : cfg.seeds.front());
    } else if (ev->parsed()) {
      cmd_eval(cfg, checkpoint, split);
    } else if (render->parsed()) {
      cmd_render(cfg, checkpoint, episodes);
    } else if (summ->parsed()) {
      cmd_summarize(cfg);
    } else if (app.got_subcommand("ablate-scarcity")) {
      cmd_ablate_scarcity(cfg);
    } else if (app.got_subcommand("ablate-cf-iters")) {
      cmd_ablate_cf_iters(cfg);
    } else if (app.got_subcommand("zero-shot")) {
      cmd_zero_shot(cfg);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const MissingPrerequisite& e) {
    std::fprintf(stderr, "missing prerequisite: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
