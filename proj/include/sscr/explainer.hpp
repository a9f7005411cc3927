#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sscr/param_store.hpp"
#include "sscr/tensor.hpp"

namespace sscr {

struct ExplainerConfig {
  int embed_dim = 32;
  int instr_hidden = 32;  // per-direction width of the instruction reader
  int history_dim = 64;
  int feat_dim = 64;     // per-cell image feature width
  int pos_dim = 16;      // learned positional feature width (plus 2 fixed coords)
  int mem_dim = 96;      // attention memory width
  int dec_hidden = 128;  // decoder GRU width
  int max_len = 12;      // decode steps / padded instruction length

  int instruction_dim() const { return 2 * instr_hidden; }
};

// Encoded dialogue prefix as the explainer sees it: a folded summary vector
// plus the individual per-turn instruction codes (extra attention rows).
struct HistoryEncoding {
  Tensor h;                   // [history_dim]
  std::vector<Tensor> turns;  // instruction code per past turn
};

// Instruction-reconstructing decoder: given the image before and after an
// edit plus the encoded dialogue prefix, it decodes the instruction that
// caused the change. Attention memory rows are per-cell visual-difference
// features plus one row per past instruction and one for the folded history.
// All parameters live in one store; freeze() after pretraining makes it a
// fixed loss module.
class ExplainerModel {
 public:
  ExplainerModel(const ExplainerConfig& cfg, std::uint64_t seed);

  const ExplainerConfig& config() const { return cfg_; }
  ParameterStore& store() { return store_; }
  const ParameterStore& store() const { return store_; }
  void freeze() { store_.freeze(); }

  // Encodes past instructions (each as padded token ids) with the explainer's
  // own reader; empty history gives a zero summary and no turn rows.
  HistoryEncoding encode_history(const std::vector<std::vector<int>>& past_token_ids) const;

  // Per-cell feature difference between the two images, shape [64, feat_dim].
  // Identical images give an exactly-zero difference.
  Tensor visual_difference(const Tensor& image, const Tensor& prev_image) const;

  // Teacher-forced logits, one [vocab] tensor per target position of
  // `reference` (padded ids BOS ... EOS PAD*; targets run up to and
  // including EOS).
  std::vector<Tensor> reconstruction_logits(const Tensor& image, const Tensor& prev_image,
                                            const HistoryEncoding& history,
                                            const std::vector<int>& reference) const;

  // Greedy decode of exactly `length` token ids; positions after an emitted
  // EOS are PAD.
  std::vector<int> explain(const Tensor& image, const Tensor& prev_image,
                           const HistoryEncoding& history, int length) const;

 private:
  Tensor encode_cells(const Tensor& image) const;
  Tensor attention_memory(const Tensor& f_diff, const Tensor& f_prev, const Tensor& offsets,
                          const HistoryEncoding& history) const;
  Tensor decoder_start(const Tensor& f_diff, const HistoryEncoding& history) const;
  Tensor decode_step(Tensor& state, int prev_id, const Tensor& memory) const;

  ExplainerConfig cfg_;
  ParameterStore store_;
};

// Summed cross-entropy of the teacher-forced logits against the reference
// targets (the ids that follow each fed position, up to and including EOS).
// Logit count must match the target count.
Tensor ctc_loss(const std::vector<Tensor>& logits, const std::vector<int>& reference);

// Number of target positions ctc_loss scores for this reference.
int reference_target_count(const std::vector<int>& reference);

}  // namespace sscr
