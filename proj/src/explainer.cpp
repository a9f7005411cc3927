#include "sscr/explainer.hpp"

#include <cmath>
#include <stdexcept>

#include "sscr/editor.hpp"
#include "sscr/grammar.hpp"
#include "sscr/render.hpp"
#include "sscr/scene.hpp"

namespace sscr {

namespace {

constexpr int kCells = kGridSize * kGridSize;
constexpr int kPatch = kCellPixels * kCellPixels * 3;

void create_gru(ParameterStore& store, const std::string& prefix, int in_dim, int hidden,
                Rng& rng) {
  for (const char* gate : {"z", "r", "n"}) {
    store.create_weight(prefix + "_w" + gate, in_dim, hidden, rng);
    store.create_weight(prefix + "_u" + gate, hidden, hidden, rng);
    store.create_bias(prefix + "_b" + gate, hidden);
  }
}

Tensor gru_step(const ParameterStore& store, const std::string& prefix, const Tensor& x,
                const Tensor& h) {
  return gru_cell(x, h, store.get(prefix + "_wz"), store.get(prefix + "_uz"),
                  store.get(prefix + "_bz"), store.get(prefix + "_wr"), store.get(prefix + "_ur"),
                  store.get(prefix + "_br"), store.get(prefix + "_wn"), store.get(prefix + "_un"),
                  store.get(prefix + "_bn"));
}

const Tensor& mean_over_cells() {
  static Tensor v = Tensor::constant({kCells}, std::vector<double>(kCells, 1.0 / kCells));
  return v;
}

// Per-cell offset from the centroid of absolute pixel change, precomputed
// from raw values as a fixed input feature: relation words and the anchor
// object depend on where existing content sits relative to the edited region.
Tensor change_offsets(const Tensor& image, const Tensor& prev_image) {
  const std::vector<int>& idx = EditorModel::cells_from_image_index();
  const std::vector<double>& a = image.values();
  const std::vector<double>& b = prev_image.values();
  const std::vector<double>& coords = EditorModel::cell_coordinates().values();

  double cx = 0, cy = 0, total = 0;
  for (int c = 0; c < kCells; ++c) {
    double mass = 0;
    for (int p = 0; p < kPatch; ++p) {
      int i = idx[static_cast<size_t>(c * kPatch + p)];
      mass += std::abs(a[static_cast<size_t>(i)] - b[static_cast<size_t>(i)]);
    }
    cx += mass * coords[static_cast<size_t>(c * 2)];
    cy += mass * coords[static_cast<size_t>(c * 2 + 1)];
    total += mass;
  }

  std::vector<double> off(kCells * 2, 0.0);
  if (total > 1e-9) {
    cx /= total;
    cy /= total;
    for (int c = 0; c < kCells; ++c) {
      off[static_cast<size_t>(c * 2)] = coords[static_cast<size_t>(c * 2)] - cx;
      off[static_cast<size_t>(c * 2 + 1)] = coords[static_cast<size_t>(c * 2 + 1)] - cy;
    }
  }
  return Tensor::constant({kCells, 2}, std::move(off));
}

std::vector<int> active_ids(const std::vector<int>& token_ids) {
  std::vector<int> ids;
  for (int id : token_ids) {
    if (id == kPadId) break;
    if (id < 0 || id >= kVocabSize) {
      throw std::invalid_argument("explainer: token id out of range: " + std::to_string(id));
    }
    ids.push_back(id);
  }
  if (ids.empty()) throw std::invalid_argument("explainer: empty token sequence");
  return ids;
}

}  // namespace

ExplainerModel::ExplainerModel(const ExplainerConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  if (cfg_.instruction_dim() != cfg_.feat_dim || cfg_.history_dim != cfg_.feat_dim) {
    throw std::invalid_argument(
        "ExplainerConfig: feat_dim, history_dim and 2*instr_hidden must agree "
        "(shared attention-row width)");
  }
  Rng rng(seed);
  const int f = cfg_.feat_dim;
  // Cell rows carry difference + previous-canvas features so the decoder can
  // name anchor objects; coords, centroid offsets, learned pos and row-type
  // flags follow.
  const int row = 2 * f + 4 + cfg_.pos_dim + 2;
  const int g = cfg_.dec_hidden;

  store_.create_uniform("embed", {kVocabSize, cfg_.embed_dim}, -0.1, 0.1, rng);
  create_gru(store_, "instr_fwd", cfg_.embed_dim, cfg_.instr_hidden, rng);
  create_gru(store_, "instr_bwd", cfg_.embed_dim, cfg_.instr_hidden, rng);
  create_gru(store_, "hist", cfg_.instruction_dim(), cfg_.history_dim, rng);
  store_.create_weight("enc_w", kPatch, f, rng);
  store_.create_bias("enc_b", f);
  store_.create_uniform("pos", {kCells, cfg_.pos_dim}, -0.5, 0.5, rng);
  store_.create_weight("mem_w", row, cfg_.mem_dim, rng);
  store_.create_bias("mem_b", cfg_.mem_dim);
  for (const char* sa : {"sa1", "sa2"}) {
    store_.create_weight(std::string(sa) + "_wq", cfg_.mem_dim, cfg_.mem_dim, rng);
    store_.create_weight(std::string(sa) + "_wk", cfg_.mem_dim, cfg_.mem_dim, rng);
    store_.create_weight(std::string(sa) + "_wv", cfg_.mem_dim, cfg_.mem_dim, rng);
  }
  store_.create_weight("g0_w", f + cfg_.history_dim, g, rng);
  store_.create_bias("g0_b", g);
  create_gru(store_, "dec", cfg_.embed_dim, g, rng);
  store_.create_weight("att_w", g, cfg_.mem_dim, rng);
  store_.create_bias("att_b", cfg_.mem_dim);
  store_.create_weight("out_w", g + cfg_.mem_dim, kVocabSize, rng);
  store_.create_bias("out_b", kVocabSize);
}

HistoryEncoding ExplainerModel::encode_history(
    const std::vector<std::vector<int>>& past_token_ids) const {
  HistoryEncoding enc;
  enc.h = Tensor::zeros({cfg_.history_dim});
  Tensor embed = store_.get("embed");
  for (const auto& token_ids : past_token_ids) {
    std::vector<int> ids = active_ids(token_ids);
    Tensor fwd = Tensor::zeros({cfg_.instr_hidden});
    for (int id : ids) fwd = gru_step(store_, "instr_fwd", select_row(embed, id), fwd);
    Tensor bwd = Tensor::zeros({cfg_.instr_hidden});
    for (auto it = ids.rbegin(); it != ids.rend(); ++it) {
      bwd = gru_step(store_, "instr_bwd", select_row(embed, *it), bwd);
    }
    Tensor d = concat(fwd, bwd);
    enc.turns.push_back(d);
    enc.h = gru_step(store_, "hist", d, enc.h);
  }
  return enc;
}

Tensor ExplainerModel::encode_cells(const Tensor& image) const {
  Tensor cells = permute_gather(image, EditorModel::cells_from_image_index(), {kCells, kPatch});
  return relu_t(affine(cells, store_.get("enc_w"), store_.get("enc_b")));
}

Tensor ExplainerModel::visual_difference(const Tensor& image, const Tensor& prev_image) const {
  return sub(encode_cells(image), encode_cells(prev_image));
}

Tensor ExplainerModel::attention_memory(const Tensor& f_diff, const Tensor& f_prev,
                                        const Tensor& offsets,
                                        const HistoryEncoding& history) const {
  const int pad = cfg_.feat_dim + 4 + cfg_.pos_dim;
  Tensor cell_flags = Tensor::constant({kCells, 2}, std::vector<double>(kCells * 2, 0.0));
  Tensor cell_rows = concat_cols(
      concat_cols(concat_cols(f_diff, f_prev),
                  concat_cols(concat_cols(EditorModel::cell_coordinates(), offsets),
                              store_.get("pos"))),
      cell_flags);

  std::vector<Tensor> extra;
  Tensor zero_pad = Tensor::constant({pad}, std::vector<double>(pad, 0.0));
  for (const Tensor& d : history.turns) {
    extra.push_back(concat(concat(d, zero_pad), Tensor::constant({2}, {0.0, 1.0})));
  }
  extra.push_back(concat(concat(history.h, zero_pad), Tensor::constant({2}, {1.0, 0.0})));

  Tensor raw = concat_rows(cell_rows, stack_rows(extra));
  Tensor mem = relu_t(affine(raw, store_.get("mem_w"), store_.get("mem_b")));

  // Two residual rounds of dot-product self-attention over the rows.
  double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(cfg_.mem_dim));
  for (const char* sa : {"sa1", "sa2"}) {
    Tensor q = matmul(mem, store_.get(std::string(sa) + "_wq"));
    Tensor k = matmul(mem, store_.get(std::string(sa) + "_wk"));
    Tensor v = matmul(mem, store_.get(std::string(sa) + "_wv"));
    Tensor weights = row_softmax(scale(matmul_nt(q, k), inv_sqrt));
    mem = add(mem, matmul(weights, v));
  }
  return mem;
}

Tensor ExplainerModel::decoder_start(const Tensor& f_diff, const HistoryEncoding& history) const {
  Tensor pooled = matmul(mean_over_cells(), f_diff);
  return tanh_t(affine(concat(pooled, history.h), store_.get("g0_w"), store_.get("g0_b")));
}

Tensor ExplainerModel::decode_step(Tensor& state, int prev_id, const Tensor& memory) const {
  state = gru_step(store_, "dec", select_row(store_.get("embed"), prev_id), state);
  double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(cfg_.mem_dim));
  Tensor query = affine(state, store_.get("att_w"), store_.get("att_b"));
  Tensor weights = softmax_vec(scale(matmul(memory, query), inv_sqrt));
  Tensor context = matmul(weights, memory);
  return affine(concat(state, context), store_.get("out_w"), store_.get("out_b"));
}

std::vector<Tensor> ExplainerModel::reconstruction_logits(const Tensor& image,
                                                          const Tensor& prev_image,
                                                          const HistoryEncoding& history,
                                                          const std::vector<int>& reference) const {
  int targets = reference_target_count(reference);
  Tensor f_prev = encode_cells(prev_image);
  Tensor f_diff = sub(encode_cells(image), f_prev);
  Tensor memory = attention_memory(f_diff, f_prev, change_offsets(image, prev_image), history);
  Tensor state = decoder_start(f_diff, history);
  std::vector<Tensor> logits;
  logits.reserve(targets);
  for (int i = 0; i < targets; ++i) {
    logits.push_back(decode_step(state, reference[i], memory));
  }
  return logits;
}

std::vector<int> ExplainerModel::explain(const Tensor& image, const Tensor& prev_image,
                                         const HistoryEncoding& history, int length) const {
  if (length <= 0) throw std::invalid_argument("explain: length must be positive");
  Tensor f_prev = encode_cells(prev_image);
  Tensor f_diff = sub(encode_cells(image), f_prev);
  Tensor memory = attention_memory(f_diff, f_prev, change_offsets(image, prev_image), history);
  Tensor state = decoder_start(f_diff, history);
  std::vector<int> out(length, kPadId);
  int prev = kBosId;
  for (int i = 0; i < length; ++i) {
    Tensor logits = decode_step(state, prev, memory);
    const std::vector<double>& v = logits.values();
    int best = 0;
    for (int j = 1; j < kVocabSize; ++j) {
      if (v[j] > v[best]) best = j;
    }
    out[i] = best;
    if (best == kEosId) break;
    prev = best;
  }
  return out;
}

int reference_target_count(const std::vector<int>& reference) {
  if (reference.empty() || reference[0] != kBosId) {
    throw std::invalid_argument("reference must start with BOS");
  }
  int targets = 0;
  bool saw_eos = false;
  for (size_t i = 1; i < reference.size(); ++i) {
    if (reference[i] == kPadId) break;
    ++targets;
    if (reference[i] == kEosId) {
      saw_eos = true;
      break;
    }
  }
  if (!saw_eos) throw std::invalid_argument("reference must contain EOS");
  return targets;
}

Tensor ctc_loss(const std::vector<Tensor>& logits, const std::vector<int>& reference) {
  int targets = reference_target_count(reference);
  if (static_cast<int>(logits.size()) != targets) {
    throw std::invalid_argument("ctc_loss: got " + std::to_string(logits.size()) +
                                " logit rows for " + std::to_string(targets) + " targets");
  }
  Tensor total = Tensor::scalar(0.0);
  for (int i = 0; i < targets; ++i) {
    total = add(total, cross_entropy_logits(logits[i], reference[i + 1]));
  }
  return total;
}

}  // namespace sscr
