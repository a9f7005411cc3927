#include "sscr/editor.hpp"

#include <stdexcept>

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

const Tensor& half_patch() {
  static Tensor v = Tensor::constant({kCells, kPatch}, std::vector<double>(kCells * kPatch, 0.5));
  return v;
}

std::vector<int> active_ids(const std::vector<int>& token_ids) {
  std::vector<int> ids;
  for (int id : token_ids) {
    if (id == kPadId) break;
    if (id < 0 || id >= kVocabSize) {
      throw std::invalid_argument("encode_instruction: token id out of range: " +
                                  std::to_string(id));
    }
    ids.push_back(id);
  }
  if (ids.empty()) throw std::invalid_argument("encode_instruction: empty token sequence");
  return ids;
}

}  // namespace

const std::vector<int>& EditorModel::cells_from_image_index() {
  static std::vector<int> index = [] {
    std::vector<int> idx(kCells * kPatch);
    for (int cy = 0; cy < kGridSize; ++cy) {
      for (int cx = 0; cx < kGridSize; ++cx) {
        int cell = cy * kGridSize + cx;
        for (int py = 0; py < kCellPixels; ++py) {
          for (int px = 0; px < kCellPixels; ++px) {
            for (int ch = 0; ch < 3; ++ch) {
              int image_flat =
                  ((cy * kCellPixels + py) * kImageSize + (cx * kCellPixels + px)) * 3 + ch;
              idx[cell * kPatch + (py * kCellPixels + px) * 3 + ch] = image_flat;
            }
          }
        }
      }
    }
    return idx;
  }();
  return index;
}

const std::vector<int>& EditorModel::image_from_cells_index() {
  static std::vector<int> index = [] {
    const std::vector<int>& fwd = cells_from_image_index();
    std::vector<int> idx(fwd.size());
    for (size_t i = 0; i < fwd.size(); ++i) idx[fwd[i]] = static_cast<int>(i);
    return idx;
  }();
  return index;
}

Tensor EditorModel::cell_coordinates() {
  static Tensor coords = [] {
    std::vector<double> v(kCells * 2);
    for (int cy = 0; cy < kGridSize; ++cy) {
      for (int cx = 0; cx < kGridSize; ++cx) {
        int cell = cy * kGridSize + cx;
        v[cell * 2 + 0] = static_cast<double>(cx) / (kGridSize - 1);
        v[cell * 2 + 1] = static_cast<double>(cy) / (kGridSize - 1);
      }
    }
    return Tensor::constant({kCells, 2}, std::move(v));
  }();
  return coords;
}

EditorModel::EditorModel(const EditorConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  Rng rng(seed);
  const int d = cfg_.instruction_dim();
  const int h = cfg_.state_dim();
  const int f = cfg_.feat_dim;
  const int pos = 2 + cfg_.pos_dim;

  // Wide embedding init: instruction codes must be well separated from the
  // start or the GAN's conditioning signal is too weak to bootstrap.
  gen_.create_uniform("embed", {kVocabSize, cfg_.embed_dim}, -1.0, 1.0, rng);
  create_gru(gen_, "instr_fwd", cfg_.embed_dim, cfg_.instr_hidden, rng);
  create_gru(gen_, "instr_bwd", cfg_.embed_dim, cfg_.instr_hidden, rng);
  create_gru(gen_, "hist", d, cfg_.history_dim, rng);
  gen_.create_weight("enc_w", kPatch, f, rng);
  gen_.create_bias("enc_b", f);
  gen_.create_uniform("gen_pos", {kCells, cfg_.pos_dim}, -0.5, 0.5, rng);
  gen_.create_weight("gen_wq", h, f, rng);
  gen_.create_bias("gen_bq", f);
  const int summary = f + pos;
  const int gen_in = f + pos + h + summary + f;
  gen_.create_weight("gen_w1", gen_in, cfg_.gen_hidden, rng);
  gen_.create_bias("gen_b1", cfg_.gen_hidden);
  gen_.create_weight("gen_w2", cfg_.gen_hidden, kPatch, rng);
  gen_.create_bias("gen_b2", kPatch);

  Rng disc_rng = rng.child(1);
  disc_.create_weight("disc_w1", kPatch + 1 + 2 + h, cfg_.disc_hidden, disc_rng);
  disc_.create_bias("disc_b1", cfg_.disc_hidden);
  disc_.create_weight("disc_wo", cfg_.disc_hidden + h, 1, disc_rng);
  disc_.create_bias("disc_bo", 1);
  disc_.create_weight("disc_wp", h, cfg_.disc_hidden, disc_rng);
  disc_.create_weight("disc_wq", h, kPatch, disc_rng);
}

Tensor EditorModel::run_bigru(const std::vector<int>& ids) const {
  Tensor embed = gen_.get("embed");
  Tensor fwd = Tensor::zeros({cfg_.instr_hidden});
  for (int id : ids) fwd = gru_step(gen_, "instr_fwd", select_row(embed, id), fwd);
  Tensor bwd = Tensor::zeros({cfg_.instr_hidden});
  for (auto it = ids.rbegin(); it != ids.rend(); ++it) {
    bwd = gru_step(gen_, "instr_bwd", select_row(embed, *it), bwd);
  }
  return concat(fwd, bwd);
}

Tensor EditorModel::encode_instruction(const std::vector<int>& token_ids) const {
  return run_bigru(active_ids(token_ids));
}

Tensor EditorModel::initial_history() const { return Tensor::zeros({cfg_.state_dim()}); }

Tensor EditorModel::history_step(const Tensor& instruction_code, const Tensor& history) const {
  if (history.numel() != cfg_.state_dim()) {
    throw std::invalid_argument("history_step: state width mismatch");
  }
  std::vector<int> tail(static_cast<size_t>(cfg_.history_dim));
  for (size_t i = 0; i < tail.size(); ++i) {
    tail[i] = cfg_.instruction_dim() + static_cast<int>(i);
  }
  Tensor rec = permute_gather(history, tail, {cfg_.history_dim});
  return concat(instruction_code, gru_step(gen_, "hist", instruction_code, rec));
}

Tensor EditorModel::generate(const Tensor& prev_image, const Tensor& history) const {
  Tensor cells_raw = permute_gather(prev_image, cells_from_image_index(), {kCells, kPatch});
  Tensor f_prev = relu_t(affine(cells_raw, gen_.get("enc_w"), gen_.get("enc_b")));
  Tensor pos = concat_cols(cell_coordinates(), gen_.get("gen_pos"));

  // History-driven attention over cells picks out the anchor region.
  Tensor query = affine(history, gen_.get("gen_wq"), gen_.get("gen_bq"));
  Tensor attn = softmax_vec(matmul(f_prev, query));
  Tensor feats_pos = concat_cols(f_prev, pos);
  Tensor summary = matmul(attn, feats_pos);

  Tensor global = matmul(mean_over_cells(), f_prev);
  Tensor input = concat_cols(
      concat_cols(concat_cols(feats_pos, broadcast_rows(history, kCells)),
                  broadcast_rows(summary, kCells)),
      broadcast_rows(global, kCells));

  Tensor hidden = relu_t(affine(input, gen_.get("gen_w1"), gen_.get("gen_b1")));
  // Residual toward the previous canvas so an untrained generator copies it.
  Tensor logits = add(affine(hidden, gen_.get("gen_w2"), gen_.get("gen_b2")),
                      scale(sub(cells_raw, half_patch()), 8.0));
  Tensor pix = sigmoid_t(logits);
  return permute_gather(pix, image_from_cells_index(), {kImageSize, kImageSize, 3});
}

Tensor EditorModel::discriminate(const Tensor& image, const Tensor& history) const {
  Tensor cells = permute_gather(image, cells_from_image_index(), {kCells, kPatch});
  // Per-cell template match: the history decodes to a patch template and each
  // cell scores its content against it. This makes image-instruction
  // agreement a first-class input instead of a conjunction the hidden layer
  // would have to discover on its own.
  Tensor match = reshape(matmul(cells, matmul(history, disc_.get("disc_wq"))), {kCells, 1});
  Tensor input = concat_cols(concat_cols(concat_cols(cells, match), cell_coordinates()),
                             broadcast_rows(history, kCells));
  Tensor hidden = relu_t(affine(input, disc_.get("disc_w1"), disc_.get("disc_b1")));
  Tensor pooled = matmul(mean_over_cells(), hidden);
  Tensor feat = concat(pooled, history);
  Tensor head = add(matmul(feat, disc_.get("disc_wo")), disc_.get("disc_bo"));
  // Global projection term on the pooled features complements the local one.
  return add(head, sum_all(mul(pooled, matmul(history, disc_.get("disc_wp")))));
}

}  // namespace sscr
