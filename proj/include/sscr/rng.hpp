#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace sscr {

// Seeded RNG with portable draw helpers. std::mt19937_64 output is fully
// specified; the mappings below avoid the implementation-defined
// distributions so identical seeds give identical streams everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // [0, 1)
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n)
  int uniform_int(int n) {
    return static_cast<int>(engine_() % static_cast<std::uint64_t>(n));
  }

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<size_t>(uniform_int(static_cast<int>(v.size())))];
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(uniform_int(i + 1))]);
    }
  }

  // Selection sampling: k items from [0, n) in increasing order.
  std::vector<int> sample_indices(int n, int k) {
    std::vector<int> out;
    out.reserve(static_cast<size_t>(k));
    int remaining = n, needed = k;
    for (int i = 0; i < n && needed > 0; ++i) {
      if (static_cast<double>(remaining) * uniform() < static_cast<double>(needed)) {
        out.push_back(i);
        --needed;
      }
      --remaining;
    }
    return out;
  }

  // Independent child stream; offsets decorrelate substreams.
  Rng child(std::uint64_t offset) {
    return Rng(next_u64() ^ (0x9e3779b97f4a7c15ULL * (offset + 1)));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace sscr
