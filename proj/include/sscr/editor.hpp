#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sscr/param_store.hpp"
#include "sscr/rng.hpp"
#include "sscr/tensor.hpp"

namespace sscr {

struct EditorConfig {
  int embed_dim = 32;     // token embedding width
  int instr_hidden = 32;  // per-direction GRU width; instruction code is 2x this
  int history_dim = 64;   // recurrent turn-state width
  int feat_dim = 64;      // per-cell image feature width
  int pos_dim = 16;       // learned positional feature width (plus 2 fixed coords)
  int gen_hidden = 128;   // generator per-cell MLP width
  int disc_hidden = 64;   // discriminator per-cell MLP width

  int instruction_dim() const { return 2 * instr_hidden; }
  // Exposed dialogue-state width: current instruction code + recurrent summary.
  int state_dim() const { return instruction_dim() + history_dim; }
};

// Iterative conditional editor: a bidirectional GRU reads each instruction, a
// recurrent cell folds instruction codes into a dialogue history, and a
// per-cell generator repaints the canvas conditioned on that history. The
// discriminator scores (image, history) pairs. Generator-side and
// discriminator-side parameters live in separate stores so the two can be
// stepped independently.
class EditorModel {
 public:
  EditorModel(const EditorConfig& cfg, std::uint64_t seed);

  const EditorConfig& config() const { return cfg_; }
  ParameterStore& generator_store() { return gen_; }
  ParameterStore& discriminator_store() { return disc_; }
  const ParameterStore& generator_store() const { return gen_; }
  const ParameterStore& discriminator_store() const { return disc_; }

  // Instruction code d from padded token ids (BOS ... EOS PAD*). PAD after EOS
  // is ignored; the code concatenates the two directional final states.
  Tensor encode_instruction(const std::vector<int>& token_ids) const;

  // Zero history for the start of an episode.
  Tensor initial_history() const;

  // h_t = [d_t, GRU(d_t, r_{t-1})]: the state keeps the current instruction
  // code verbatim next to the folded prefix so downstream conditioning sees
  // the live instruction at full strength, not diluted into the recurrence.
  Tensor history_step(const Tensor& instruction_code, const Tensor& history) const;

  // Repaints prev_image ([32,32,3]) under the current history; the output is
  // sigmoid-bounded and starts near a copy of the input at initialization.
  Tensor generate(const Tensor& prev_image, const Tensor& history) const;

  // Realism/consistency logit (shape [1]) for an image under a history.
  Tensor discriminate(const Tensor& image, const Tensor& history) const;

  // Flattened-image -> per-cell layout tables, shared with the explainer.
  static const std::vector<int>& cells_from_image_index();
  static const std::vector<int>& image_from_cells_index();
  // Fixed per-cell (x/7, y/7) coordinates, shape [64,2].
  static Tensor cell_coordinates();

 private:
  Tensor run_bigru(const std::vector<int>& ids) const;

  EditorConfig cfg_;
  ParameterStore gen_;
  ParameterStore disc_;
};

}  // namespace sscr
