#pragma once

#include <vector>

#include "sscr/scene.hpp"

namespace sscr {

struct F1Counts {
  long tp = 0;
  long fp = 0;
  long fn = 0;

  void add(const Scene& predicted, const Scene& truth);
};

struct F1Score {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Micro-averaged object identity F1 (an object matches iff color and shape
// both match; positions are scored by relsim, not here).
F1Score f1_from_counts(const F1Counts& counts);
F1Score object_f1(const std::vector<std::pair<Scene, Scene>>& pairs);

// Relational similarity: object recall scaled by the fraction of ground-truth
// scene-graph edges (src spec, dst spec, relation) present in the prediction.
// Scenes without edges fall back to plain object recall.
double relsim(const Scene& predicted, const Scene& truth);
double mean_relsim(const std::vector<std::pair<Scene, Scene>>& pairs);

// Corpus BLEU-4 over token id sequences, add-one smoothing on every n-gram
// precision, standard brevity penalty. Returns a value in [0, 1].
double bleu4(const std::vector<std::vector<int>>& hypotheses,
             const std::vector<std::vector<int>>& references);

// exp(total_nll / token_count); token_count == 0 is an error.
double perplexity(double total_nll, long token_count);

}  // namespace sscr
