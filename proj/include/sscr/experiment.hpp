#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sscr/editor.hpp"
#include "sscr/explainer.hpp"
#include "sscr/train.hpp"

namespace sscr {

// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A required artifact has not been produced yet (CLI exit code 3). The
// message names the missing file.
class MissingPrerequisite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetConfig {
  int train = 600;
  int val = 200;
  int test = 200;
  int turns = 5;
  std::uint64_t seed = 20260819;
};

struct ExperimentConfig {
  std::string out_dir = "runs";
  DatasetConfig dataset;
  EditorConfig editor;
  ExplainerConfig explainer;
  PretrainConfig pretrain;
  TrainConfig train;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::vector<double> fractions = {1.0, 0.8, 0.5};
  std::vector<int> cf_iteration_caps = {0, 75, 150, 300, 600, 1200};
};

ExperimentConfig load_experiment_config(const std::string& path);
void save_experiment_config(const ExperimentConfig& cfg, const std::string& path);
// Field-level checks shared by load and the CLI overrides.
void validate_config(const ExperimentConfig& cfg);

struct RunPaths {
  std::string root;
  std::string data;
  std::string checkpoints;
  std::string reports;
  std::string curves;
  std::string renders;
};

// Creates the artifact tree under out_dir and archives the config snapshot.
RunPaths prepare_run_dirs(const ExperimentConfig& cfg);

// Artifact naming helpers ("f50" encodes fraction 0.5).
std::string fraction_tag(double fraction);
std::string editor_checkpoint_name(TrainMode mode, double fraction, std::uint64_t seed);

// Subcommand bodies. All throw ConfigError / MissingPrerequisite /
// std::runtime_error; the CLI maps these to exit codes.
void cmd_gen_data(const ExperimentConfig& cfg, bool zero_shot);
void cmd_pretrain_explainer(const ExperimentConfig& cfg, double fraction, bool zero_shot);
void cmd_train(const ExperimentConfig& cfg, TrainMode mode, double fraction, std::uint64_t seed);
void cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint,
              const std::string& split);
void cmd_ablate_scarcity(const ExperimentConfig& cfg);
void cmd_ablate_cf_iters(const ExperimentConfig& cfg);
void cmd_zero_shot(const ExperimentConfig& cfg);
void cmd_render(const ExperimentConfig& cfg, const std::string& checkpoint, int episodes);
void cmd_summarize(const ExperimentConfig& cfg);

// Shared plumbing, exposed for tests.
std::vector<Episode> load_split(const RunPaths& paths, const std::string& split, bool zero_shot);
EditorModel load_editor(const ExperimentConfig& cfg, const std::string& checkpoint_path);
ExplainerModel load_explainer(const ExperimentConfig& cfg, const std::string& checkpoint_path);
std::uint64_t file_checksum(const std::string& path);

}  // namespace sscr
