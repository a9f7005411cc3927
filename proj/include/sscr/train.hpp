#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sscr/editor.hpp"
#include "sscr/episodes.hpp"
#include "sscr/explainer.hpp"
#include "sscr/metrics.hpp"

namespace sscr {

enum class TrainMode { Baseline, CtcOnly, Sscr };
const char* train_mode_name(TrainMode mode);  // "baseline" / "ctc" / "sscr"
TrainMode train_mode_from_name(const std::string& name);

enum class CfLossSource { Explainer, Discriminator };
const char* cf_loss_source_name(CfLossSource source);
CfLossSource cf_loss_source_from_name(const std::string& name);

struct TrainConfig {
  int epochs = 12;
  double lr_g = 1e-4;   // generator-side Adam (includes reconstruction term)
  double lr_d = 4e-4;   // discriminator Adam
  double lr_cf = 5e-5;  // counterfactual-phase Adam
  double ctc_weight = 1.0;
  int cf_iterations = 300;
  CfLossSource cf_source = CfLossSource::Explainer;
  std::uint64_t seed = 1;
  int log_every = 25;  // curve row cadence, in episodes
};

// Averaged reported losses over one logging window. NaN marks a column that
// does not apply to the phase the row was logged in.
struct CurveRow {
  long iteration = 0;
  double l_g = 0.0;
  double l_d = 0.0;
  double l_e = 0.0;
  double l_e_cf = 0.0;
};

struct TrainStats {
  std::vector<CurveRow> curves;
  long generator_steps = 0;
  long discriminator_steps = 0;
  long counterfactual_steps = 0;
  long explainer_calls = 0;
};

// Adversarial + instruction-reconstruction training. One generator-side and
// one discriminator-side Adam step per episode; teacher forcing feeds the
// rendered ground-truth previous canvas into the generator at every turn.
// `explainer` must be non-null for the reconstruction modes and is only read
// (its store stays frozen); Baseline never invokes it. `on_epoch` runs after
// each finished epoch (checkpointing hook).
TrainStats train_editor(EditorModel& model, ExplainerModel* explainer,
                        const std::vector<Episode>& data, TrainMode mode, const TrainConfig& cfg,
                        const std::function<void(int)>& on_epoch = {});

// Counterfactual phase: grafts intervened instructions onto real dialogue
// prefixes and trains only the generator store against the frozen explainer
// (or, for ablation, the frozen discriminator). Each call continues the
// iteration count in `stats`, and the per-iteration randomness depends only
// on (seed, absolute iteration), so chunked runs match one long run.
void counterfactual_phase(EditorModel& model, ExplainerModel* explainer,
                          const std::vector<Episode>& data, const TrainConfig& cfg,
                          TrainStats& stats);

struct EpisodeEval {
  int id = 0;
  double f1 = 0.0;
  double relsim = 0.0;
};

struct EvalResult {
  F1Score objects;
  F1Counts counts;
  double relsim = 0.0;
  long episodes = 0;
  // Ground-truth scenes for turns before the last read during evaluation;
  // rollouts must keep this at zero.
  long intermediate_scene_reads = 0;
  std::vector<EpisodeEval> per_episode;
};

// Closed-loop rollout: the model repaints its own previous output from a
// blank canvas, and only the final canvas is detected and scored against the
// final ground-truth scene.
EvalResult evaluate_editor(const EditorModel& model, const std::vector<Episode>& episodes);

// Same rollout and scoring with the symbolic oracle editor in place of the
// generator (upper bound / pipeline check).
EvalResult evaluate_oracle(const std::vector<Episode>& episodes);

struct PretrainConfig {
  int epochs = 24;
  double lr = 1e-3;
  // After `decay_after` epochs the learning rate is multiplied by
  // `decay_factor` (cuts the late-training plateau).
  int decay_after = 16;
  double decay_factor = 0.3;
  std::uint64_t seed = 7;
};

struct ExplainerQuality {
  double ppl = 0.0;
  double bleu = 0.0;
  double token_accuracy = 0.0;
  std::vector<double> train_ppl_per_epoch;
};

// Teacher-forced reconstruction on (prev image, image, history) -> tokens for
// every turn of every episode; freezes the store afterwards. Returns held-out
// quality plus the per-epoch training perplexity curve.
ExplainerQuality pretrain_explainer(ExplainerModel& model, const std::vector<Episode>& train,
                                    const std::vector<Episode>& val, const PretrainConfig& cfg);

// Teacher-forced PPL plus greedy-decode BLEU-4 and token accuracy.
ExplainerQuality evaluate_explainer(const ExplainerModel& model,
                                    const std::vector<Episode>& episodes);

}  // namespace sscr
