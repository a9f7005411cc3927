#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <map>

#include "doctest.h"
#include "sscr/grammar.hpp"
#include "sscr/metrics.hpp"
#include "sscr/rng.hpp"

using namespace sscr;

namespace {

Scene scene_of(std::vector<Placement> ps) {
  Scene s;
  s.placements = std::move(ps);
  s.check_valid();
  return s;
}

// Slow, obviously-correct corpus BLEU-4 with add-one smoothing, written
// independently of the library implementation.
double bleu_oracle(const std::vector<std::vector<int>>& hyps,
                   const std::vector<std::vector<int>>& refs) {
  double logp = 0.0;
  for (int n = 1; n <= 4; ++n) {
    double match = 0.0, total = 0.0;
    for (size_t i = 0; i < hyps.size(); ++i) {
      std::map<std::string, int> h, r;
      auto key = [&](const std::vector<int>& seq, size_t j) {
        std::string k;
        for (int t = 0; t < n; ++t) k += std::to_string(seq[j + static_cast<size_t>(t)]) + ",";
        return k;
      };
      for (size_t j = 0; j + static_cast<size_t>(n) <= hyps[i].size(); ++j) h[key(hyps[i], j)]++;
      for (size_t j = 0; j + static_cast<size_t>(n) <= refs[i].size(); ++j) r[key(refs[i], j)]++;
      for (const auto& [k, c] : h) {
        total += c;
        auto it = r.find(k);
        if (it != r.end()) match += std::min(c, it->second);
      }
    }
    logp += std::log((match + 1.0) / (total + 1.0));
  }
  double hl = 0.0, rl = 0.0;
  for (const auto& h : hyps) hl += static_cast<double>(h.size());
  for (const auto& r : refs) rl += static_cast<double>(r.size());
  double bp = 1.0;
  if (hl == 0.0) {
    bp = 0.0;
  } else if (hl < rl) {
    bp = std::exp(1.0 - rl / hl);
  }
  return bp * std::exp(logp / 4.0);
}

}  // namespace

TEST_CASE("object f1 hand case: two of three correct") {
  const Scene pred = scene_of({{{Color::Red, Shape3::Cube}, 1, 1},
                               {{Color::Blue, Shape3::Sphere}, 2, 2},
                               {{Color::Green, Shape3::Cylinder}, 3, 3}});
  const Scene truth = scene_of({{{Color::Red, Shape3::Cube}, 1, 1},
                                {{Color::Blue, Shape3::Sphere}, 5, 5},
                                {{Color::Yellow, Shape3::Cube}, 3, 3}});
  const F1Score s = object_f1({{pred, truth}});
  CHECK(s.precision == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(s.recall == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(s.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("object f1 is identity-based, not position-based") {
  const Scene pred = scene_of({{{Color::Red, Shape3::Cube}, 0, 0}});
  const Scene truth = scene_of({{{Color::Red, Shape3::Cube}, 7, 7}});
  const F1Score s = object_f1({{pred, truth}});
  CHECK(s.f1 == doctest::Approx(1.0));
}

TEST_CASE("micro averaging pools counts across pairs") {
  const Scene perfect = scene_of({{{Color::Red, Shape3::Cube}, 0, 0}});
  const Scene empty;
  // Pair 1: perfect single object. Pair 2: complete miss of a single object.
  const F1Score s = object_f1({{perfect, perfect}, {empty, perfect}});
  CHECK(s.precision == doctest::Approx(1.0));  // tp=1 fp=0
  CHECK(s.recall == doctest::Approx(0.5));     // tp=1 fn=1
  CHECK(s.f1 == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("empty prediction against empty truth is vacuously perfect") {
  const Scene empty;
  const F1Score s = object_f1({{empty, empty}});
  CHECK(s.precision == 0.0);  // no counts at all
  CHECK(s.recall == 0.0);
  CHECK(s.f1 == 0.0);
  CHECK(relsim(empty, empty) == doctest::Approx(1.0));
}

TEST_CASE("relsim hand case: all objects, half the edges") {
  // Truth: three objects in a row -> edges (left/right per ordered pair).
  const Scene truth = scene_of({{{Color::Red, Shape3::Cube}, 1, 1},
                                {{Color::Blue, Shape3::Sphere}, 3, 1},
                                {{Color::Green, Shape3::Cylinder}, 5, 1}});
  // Prediction keeps all three objects but scrambles one column so half the
  // ordered-pair relations survive.
  const Scene pred = scene_of({{{Color::Red, Shape3::Cube}, 1, 1},
                               {{Color::Blue, Shape3::Sphere}, 3, 1},
                               {{Color::Green, Shape3::Cylinder}, 2, 1}});

  const SceneGraph gt = scene_graph(truth);
  const SceneGraph pd = scene_graph(pred);
  REQUIRE(gt.edges.size() == 6);

  // Shared edges: red<blue and blue>red survive; green moved between them.
  // green vs red keeps right-of; green vs blue flips.
  // Expected common: red-left-blue, blue-right-red, green-right-red, red-left-green -> 4 of 6.
  double expected = 1.0 * 4.0 / 6.0;
  CHECK(relsim(pred, truth) == doctest::Approx(expected).epsilon(1e-12));
  (void)pd;
}

TEST_CASE("relsim: exactly half the edges with full recall") {
  // Truth: two objects stacked diagonally -> 4 edges (lr + fb both ways).
  const Scene truth = scene_of({{{Color::Red, Shape3::Cube}, 2, 2},
                                {{Color::Blue, Shape3::Sphere}, 4, 4}});
  // Prediction keeps the horizontal order, flips the vertical order:
  // 2 of 4 edges survive.
  const Scene pred = scene_of({{{Color::Red, Shape3::Cube}, 2, 4},
                               {{Color::Blue, Shape3::Sphere}, 4, 2}});
  CHECK(scene_graph(truth).edges.size() == 4);
  CHECK(relsim(pred, truth) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("relsim scales by object recall") {
  const Scene truth = scene_of({{{Color::Red, Shape3::Cube}, 2, 2},
                                {{Color::Blue, Shape3::Sphere}, 4, 4}});
  const Scene pred = scene_of({{{Color::Red, Shape3::Cube}, 2, 2}});
  // Recall 1/2, no surviving ordered-pair edges in the prediction.
  CHECK(relsim(pred, truth) == doctest::Approx(0.0));

  // Single-object truth has no edges: plain recall.
  const Scene single = scene_of({{{Color::Red, Shape3::Cube}, 2, 2}});
  CHECK(relsim(pred, single) == doctest::Approx(1.0));
  const Scene wrong = scene_of({{{Color::Green, Shape3::Cube}, 2, 2}});
  CHECK(relsim(wrong, single) == doctest::Approx(0.0));
}

TEST_CASE("mean_relsim averages per pair") {
  const Scene a = scene_of({{{Color::Red, Shape3::Cube}, 2, 2}});
  const Scene b = scene_of({{{Color::Blue, Shape3::Sphere}, 3, 3}});
  CHECK(mean_relsim({{a, a}, {b, a}}) == doctest::Approx(0.5));
}

TEST_CASE("bleu4 is exactly one on a perfect corpus") {
  std::vector<std::vector<int>> refs = {{1, 2, 3, 4, 5, 6}, {7, 8, 9, 10, 11}};
  CHECK(bleu4(refs, refs) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bleu4 penalizes brevity and mismatches") {
  std::vector<std::vector<int>> refs = {{1, 2, 3, 4, 5, 6, 7, 8}};
  std::vector<std::vector<int>> hyp_short = {{1, 2, 3, 4}};
  std::vector<std::vector<int>> hyp_wrong = {{9, 9, 9, 9, 9, 9, 9, 9}};
  CHECK(bleu4(hyp_short, refs) < 1.0);
  // All n-gram precisions collapse to their smoothed floor 1/(total+1).
  CHECK(bleu4(hyp_wrong, refs) == doctest::Approx(std::pow(1.0 / (9.0 * 8 * 7 * 6), 0.25)));
  CHECK(bleu4(hyp_wrong, refs) > 0.0);  // smoothing keeps it positive
}

TEST_CASE("bleu4 matches an independent oracle on random corpora") {
  Rng rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<int>> hyps, refs;
    const int pairs = 1 + rng.uniform_int(6);
    for (int i = 0; i < pairs; ++i) {
      const int rl = 3 + rng.uniform_int(9);
      const int hl = 1 + rng.uniform_int(11);
      std::vector<int> ref, hyp;
      for (int t = 0; t < rl; ++t) ref.push_back(rng.uniform_int(6));
      for (int t = 0; t < hl; ++t) {
        // Bias the hypothesis toward the reference so n-grams overlap.
        hyp.push_back(rng.bernoulli(0.6) && t < rl ? ref[static_cast<size_t>(t)]
                                                   : rng.uniform_int(6));
      }
      hyps.push_back(hyp);
      refs.push_back(ref);
    }
    CHECK(bleu4(hyps, refs) == doctest::Approx(bleu_oracle(hyps, refs)).epsilon(1e-12));
  }
}

TEST_CASE("bleu4 on real instruction encodings") {
  std::vector<std::vector<int>> refs, hyps;
  refs.push_back(tokenize("add a red cube behind the blue sphere"));
  hyps.push_back(tokenize("add a red cube behind the blue sphere"));
  refs.push_back(tokenize("add a gray cube at the center"));
  hyps.push_back(tokenize("add a gray sphere at the center"));
  const double b = bleu4(hyps, refs);
  CHECK(b > 0.4);
  CHECK(b < 1.0);
  CHECK(b == doctest::Approx(bleu_oracle(hyps, refs)).epsilon(1e-12));
}

TEST_CASE("perplexity of a uniform 40-way predictor is 40") {
  const long tokens = 123;
  const double nll = static_cast<double>(tokens) * std::log(40.0);
  CHECK(perplexity(nll, tokens) == doctest::Approx(40.0).epsilon(1e-9));
  CHECK(perplexity(0.0, 10) == doctest::Approx(1.0));
  CHECK_THROWS_AS(perplexity(1.0, 0), std::invalid_argument);
}
