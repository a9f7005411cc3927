#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sscr/rng.hpp"
#include "sscr/tensor.hpp"

namespace sscr {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Named trainable parameters with per-parameter Adam moments. A frozen store
// rejects optimizer steps; values stay readable.
class ParameterStore {
 public:
  // Uniform init in [-sqrt(1/fan_in), +sqrt(1/fan_in)].
  Tensor create_weight(const std::string& name, int fan_in, int fan_out, Rng& rng);
  Tensor create_bias(const std::string& name, int dim);
  Tensor create_zeros(const std::string& name, Shape shape);
  Tensor create_uniform(const std::string& name, Shape shape, double lo, double hi, Rng& rng);

  Tensor get(const std::string& name) const;
  bool has(const std::string& name) const { return params_.count(name) > 0; }
  std::vector<std::string> names() const;
  size_t size() const { return params_.size(); }

  void zero_grads();
  // Bias-corrected Adam on every parameter; increments the step counter and
  // zeroes grads. Throws std::logic_error when frozen.
  void adam_step(const AdamConfig& cfg);

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }
  std::int64_t step_count() const { return step_; }

  // FNV-1a over the raw value bits; order-stable because the map is ordered.
  std::uint64_t checksum() const;

  // Replaces values of an existing parameter (checkpoint load path).
  void set_values(const std::string& name, const std::vector<double>& values);
  void add_param(const std::string& name, Tensor t);

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  std::map<std::string, Tensor> params_;
  std::map<std::string, Moments> moments_;
  std::int64_t step_ = 0;
  bool frozen_ = false;
};

}  // namespace sscr
