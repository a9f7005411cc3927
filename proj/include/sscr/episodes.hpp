#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sscr/grammar.hpp"
#include "sscr/scene.hpp"

namespace sscr {

constexpr int kDefaultTurns = 5;

struct Turn {
  std::string text;  // instruction surface form
  ParsedEdit edit;   // parsed meaning of `text`
  Scene scene;       // scene after applying this turn
};

struct Episode {
  int id = 0;
  std::vector<Turn> turns;
};

// Each episode starts from an empty canvas and applies `turns` feasible edits
// drawn uniformly from the grammar. Fully determined by the seed.
std::vector<Episode> generate_episodes(int count, int turns, std::uint64_t seed);

struct DatasetSplits {
  std::vector<Episode> train;
  std::vector<Episode> val;
  std::vector<Episode> test;
};

// Deterministic contiguous split of independently generated episodes.
DatasetSplits make_splits(const std::vector<Episode>& all, int n_train, int n_val, int n_test);

// Seeded uniform subsample (order preserving) for data-scarcity runs.
std::vector<Episode> subsample_episodes(const std::vector<Episode>& episodes, double fraction,
                                        std::uint64_t seed);

// Color/shape pairs excluded from training in the zero-shot setting.
const std::vector<ObjectSpec>& zero_shot_holdout();

// True if any turn's target or anchor is a held-out pair.
bool mentions_holdout(const Episode& episode);

// Train episodes never mention a held-out pair; test episodes always do.
// Generation keeps drawing fresh episodes until both quotas are filled.
DatasetSplits generate_zero_shot_data(int n_train, int n_val, int n_test, int turns,
                                      std::uint64_t seed);

// JSONL: one header line, then one episode per line. Loading replays every
// edit and fails loudly if a stored scene diverges from the replay.
void save_episodes(const std::vector<Episode>& episodes, const std::string& path);
std::vector<Episode> load_episodes(const std::string& path);

}  // namespace sscr
