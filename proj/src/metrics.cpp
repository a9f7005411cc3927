#include "sscr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace sscr {
namespace {

std::set<int> spec_set(const Scene& scene) {
  std::set<int> out;
  for (const Placement& p : scene.placements) out.insert(p.spec.index());
  return out;
}

double object_recall(const Scene& predicted, const Scene& truth) {
  const std::set<int> pred = spec_set(predicted);
  const std::set<int> gt = spec_set(truth);
  if (gt.empty()) return pred.empty() ? 1.0 : 0.0;
  long tp = 0;
  for (int s : gt) tp += pred.count(s) ? 1 : 0;
  return static_cast<double>(tp) / static_cast<double>(gt.size());
}

}  // namespace

void F1Counts::add(const Scene& predicted, const Scene& truth) {
  const std::set<int> pred = spec_set(predicted);
  const std::set<int> gt = spec_set(truth);
  long hits = 0;
  for (int s : pred) hits += gt.count(s) ? 1 : 0;
  tp += hits;
  fp += static_cast<long>(pred.size()) - hits;
  fn += static_cast<long>(gt.size()) - hits;
}

F1Score f1_from_counts(const F1Counts& c) {
  F1Score s;
  if (c.tp + c.fp > 0) s.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) s.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (s.precision + s.recall > 0.0) {
    s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  }
  return s;
}

F1Score object_f1(const std::vector<std::pair<Scene, Scene>>& pairs) {
  F1Counts counts;
  for (const auto& [pred, gt] : pairs) counts.add(pred, gt);
  return f1_from_counts(counts);
}

double relsim(const Scene& predicted, const Scene& truth) {
  const double recall = object_recall(predicted, truth);
  const SceneGraph gt_graph = scene_graph(truth);
  if (gt_graph.edges.empty()) return recall;

  const SceneGraph pred_graph = scene_graph(predicted);
  std::set<SceneGraphEdge> pred_edges(pred_graph.edges.begin(), pred_graph.edges.end());
  long common = 0;
  for (const SceneGraphEdge& e : gt_graph.edges) common += pred_edges.count(e) ? 1 : 0;
  return recall * static_cast<double>(common) / static_cast<double>(gt_graph.edges.size());
}

double mean_relsim(const std::vector<std::pair<Scene, Scene>>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("mean_relsim: no pairs");
  double total = 0.0;
  for (const auto& [pred, gt] : pairs) total += relsim(pred, gt);
  return total / static_cast<double>(pairs.size());
}

double bleu4(const std::vector<std::vector<int>>& hypotheses,
             const std::vector<std::vector<int>>& references) {
  if (hypotheses.size() != references.size()) {
    throw std::invalid_argument("bleu4: hypothesis/reference count mismatch");
  }
  if (hypotheses.empty()) throw std::invalid_argument("bleu4: empty corpus");

  double log_precision_sum = 0.0;
  for (int n = 1; n <= 4; ++n) {
    long matches = 0;
    long total = 0;
    for (size_t i = 0; i < hypotheses.size(); ++i) {
      const auto& hyp = hypotheses[i];
      const auto& ref = references[i];
      std::map<std::vector<int>, long> ref_counts;
      for (size_t j = 0; j + static_cast<size_t>(n) <= ref.size(); ++j) {
        ref_counts[std::vector<int>(ref.begin() + static_cast<long>(j),
                                    ref.begin() + static_cast<long>(j) + n)]++;
      }
      std::map<std::vector<int>, long> hyp_counts;
      for (size_t j = 0; j + static_cast<size_t>(n) <= hyp.size(); ++j) {
        hyp_counts[std::vector<int>(hyp.begin() + static_cast<long>(j),
                                    hyp.begin() + static_cast<long>(j) + n)]++;
        ++total;
      }
      for (const auto& [gram, count] : hyp_counts) {
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) matches += std::min(count, it->second);
      }
    }
    log_precision_sum +=
        std::log(static_cast<double>(matches + 1) / static_cast<double>(total + 1));
  }

  long hyp_len = 0;
  long ref_len = 0;
  for (size_t i = 0; i < hypotheses.size(); ++i) {
    hyp_len += static_cast<long>(hypotheses[i].size());
    ref_len += static_cast<long>(references[i].size());
  }
  double brevity = 1.0;
  if (hyp_len < ref_len && hyp_len > 0) {
    brevity = std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  } else if (hyp_len == 0) {
    brevity = 0.0;
  }
  return brevity * std::exp(log_precision_sum / 4.0);
}

double perplexity(double total_nll, long token_count) {
  if (token_count <= 0) throw std::invalid_argument("perplexity: token_count must be positive");
  return std::exp(total_nll / static_cast<double>(token_count));
}

}  // namespace sscr
