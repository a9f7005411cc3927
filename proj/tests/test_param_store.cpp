#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "sscr/checkpoint.hpp"
#include "sscr/param_store.hpp"

using namespace sscr;

namespace {

// One Adam step computed by hand for a single weight.
double hand_adam(double value, double g, double& m, double& v, int step, const AdamConfig& cfg) {
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
  const double mhat = m / (1.0 - std::pow(cfg.beta1, step));
  const double vhat = v / (1.0 - std::pow(cfg.beta2, step));
  return value - cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
}

}  // namespace

TEST_CASE("first adam step moves a unit-gradient weight by about -lr") {
  ParameterStore store;
  Tensor w = store.create_zeros("w", {1});
  w.mutable_grad().assign(1, 1.0);

  AdamConfig cfg;
  cfg.lr = 1e-3;
  store.adam_step(cfg);

  // g=1: mhat=1, vhat=1, so the update is lr / (1 + eps).
  CHECK(w.values()[0] == doctest::Approx(-1e-3).epsilon(1e-6));
  CHECK(store.step_count() == 1);
  CHECK(w.grad()[0] == 0.0);  // step zeroes grads
}

TEST_CASE("two adam steps track the hand-computed trajectory") {
  ParameterStore store;
  Tensor w = store.create_zeros("w", {2});
  w.mutable_values() = {0.5, -1.25};

  AdamConfig cfg;
  cfg.lr = 0.01;
  double m0 = 0, v0 = 0, m1 = 0, v1 = 0;
  double x0 = 0.5, x1 = -1.25;

  w.mutable_grad() = {0.3, -0.8};
  x0 = hand_adam(x0, 0.3, m0, v0, 1, cfg);
  x1 = hand_adam(x1, -0.8, m1, v1, 1, cfg);
  store.adam_step(cfg);
  CHECK(w.values()[0] == doctest::Approx(x0).epsilon(1e-12));
  CHECK(w.values()[1] == doctest::Approx(x1).epsilon(1e-12));

  w.mutable_grad() = {-0.1, 0.45};
  x0 = hand_adam(x0, -0.1, m0, v0, 2, cfg);
  x1 = hand_adam(x1, 0.45, m1, v1, 2, cfg);
  store.adam_step(cfg);
  CHECK(w.values()[0] == doctest::Approx(x0).epsilon(1e-12));
  CHECK(w.values()[1] == doctest::Approx(x1).epsilon(1e-12));
}

TEST_CASE("weight init spans the fan-in range and is seed-deterministic") {
  Rng rng_a(42), rng_b(42);
  ParameterStore a, b;
  Tensor wa = a.create_weight("w", 64, 32, rng_a);
  Tensor wb = b.create_weight("w", 64, 32, rng_b);
  CHECK(wa.shape() == Shape{64, 32});
  CHECK(wa.values() == wb.values());

  const double bound = std::sqrt(1.0 / 64.0);
  double lo = 1e9, hi = -1e9;
  for (double v : wa.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo >= -bound);
  CHECK(hi <= bound);
  CHECK(hi - lo > bound);  // actually spread out

  Tensor bias = a.create_bias("b", 32);
  for (double v : bias.values()) CHECK(v == 0.0);
}

TEST_CASE("frozen stores reject optimizer steps but stay readable") {
  ParameterStore store;
  Tensor w = store.create_zeros("w", {3});
  store.freeze();
  CHECK(store.frozen());
  CHECK_THROWS_AS(store.adam_step(AdamConfig{}), std::logic_error);
  CHECK(store.get("w").values().size() == 3);
}

TEST_CASE("checksum is order-stable and value-sensitive") {
  ParameterStore a, b;
  a.create_zeros("x", {2});
  a.create_zeros("y", {2});
  b.create_zeros("y", {2});
  b.create_zeros("x", {2});
  CHECK(a.checksum() == b.checksum());  // ordered map, insertion order irrelevant

  a.get("x").mutable_values()[0] = 1e-9;
  CHECK(a.checksum() != b.checksum());
}

TEST_CASE("duplicate parameter names are rejected") {
  ParameterStore store;
  store.create_zeros("w", {1});
  CHECK_THROWS_AS(store.create_zeros("w", {1}), std::invalid_argument);
  CHECK_THROWS_AS(store.get("missing"), std::out_of_range);
}

TEST_CASE("checkpoints round trip bit-exactly across stores") {
  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "sscr_ckpt_test.bin").string();

  Rng rng(7);
  ParameterStore gen, disc;
  gen.create_weight("w1", 8, 4, rng);
  gen.create_weight("w2", 4, 4, rng);
  disc.create_weight("d1", 6, 2, rng);

  const auto gen_sum = gen.checksum();
  const auto disc_sum = disc.checksum();
  save_checkpoint(path, {{"generator", &gen}, {"discriminator", &disc}});
  CHECK(checkpoint_exists(path));

  // Fresh stores with identical layout but different values.
  Rng rng2(8);
  ParameterStore gen2, disc2;
  gen2.create_weight("w1", 8, 4, rng2);
  gen2.create_weight("w2", 4, 4, rng2);
  disc2.create_weight("d1", 6, 2, rng2);
  CHECK(gen2.checksum() != gen_sum);

  load_checkpoint(path, {{"generator", &gen2}, {"discriminator", &disc2}});
  CHECK(gen2.checksum() == gen_sum);
  CHECK(disc2.checksum() == disc_sum);
  CHECK(gen2.get("w1").values() == gen.get("w1").values());

  std::remove(path.c_str());
}

TEST_CASE("truncated checkpoints fail loudly") {
  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "sscr_ckpt_trunc.bin").string();

  Rng rng(9);
  ParameterStore store;
  store.create_weight("w", 16, 16, rng);
  save_checkpoint(path, {{"model", &store}});

  // Chop the file in half.
  {
    std::error_code ec;
    const auto size = fs::file_size(path, ec);
    REQUIRE(!ec);
    fs::resize_file(path, size / 2, ec);
    REQUIRE(!ec);
  }
  ParameterStore dest;
  Rng rng2(10);
  dest.create_weight("w", 16, 16, rng2);
  CHECK_THROWS_WITH_AS(load_checkpoint(path, {{"model", &dest}}), doctest::Contains("truncated"),
                       std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("loading rejects unknown files and missing sections") {
  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "sscr_ckpt_bogus.bin").string();
  {
    std::ofstream out(path, std::ios::binary);
    out << "definitely not a checkpoint";
  }
  ParameterStore store;
  store.create_zeros("w", {1});
  CHECK_THROWS_AS(load_checkpoint(path, {{"model", &store}}), std::runtime_error);
  std::remove(path.c_str());
  CHECK_FALSE(checkpoint_exists(path));
}
