#include "sscr/param_store.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace sscr {

Tensor ParameterStore::create_weight(const std::string& name, int fan_in, int fan_out, Rng& rng) {
  double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  return create_uniform(name, {fan_in, fan_out}, -bound, bound, rng);
}

Tensor ParameterStore::create_bias(const std::string& name, int dim) {
  return create_zeros(name, {dim});
}

Tensor ParameterStore::create_zeros(const std::string& name, Shape shape) {
  Tensor t = Tensor::param(shape, std::vector<double>(static_cast<size_t>(shape_numel(shape)), 0.0));
  add_param(name, t);
  return t;
}

Tensor ParameterStore::create_uniform(const std::string& name, Shape shape, double lo, double hi,
                                      Rng& rng) {
  std::vector<double> v(static_cast<size_t>(shape_numel(shape)));
  for (auto& x : v) x = rng.uniform(lo, hi);
  Tensor t = Tensor::param(shape, std::move(v));
  add_param(name, t);
  return t;
}

void ParameterStore::add_param(const std::string& name, Tensor t) {
  if (params_.count(name)) {
    throw std::invalid_argument("ParameterStore: duplicate parameter '" + name + "'");
  }
  params_.emplace(name, std::move(t));
}

Tensor ParameterStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw std::out_of_range("ParameterStore: no parameter '" + name + "'");
  }
  return it->second;
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [k, v] : params_) out.push_back(k);
  return out;
}

void ParameterStore::zero_grads() {
  for (auto& [k, t] : params_) t.zero_grad();
}

void ParameterStore::adam_step(const AdamConfig& cfg) {
  if (frozen_) {
    throw std::logic_error("ParameterStore: adam_step on a frozen store");
  }
  ++step_;
  double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_));
  double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_));
  for (auto& [name, t] : params_) {
    auto& mom = moments_[name];
    size_t n = t.values().size();
    if (mom.m.size() != n) {
      mom.m.assign(n, 0.0);
      mom.v.assign(n, 0.0);
    }
    const auto& g = t.grad();
    auto& vals = t.mutable_values();
    for (size_t i = 0; i < n; ++i) {
      mom.m[i] = cfg.beta1 * mom.m[i] + (1.0 - cfg.beta1) * g[i];
      mom.v[i] = cfg.beta2 * mom.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      double mhat = mom.m[i] / bc1;
      double vhat = mom.v[i] / bc2;
      vals[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
    t.zero_grad();
  }
}

std::uint64_t ParameterStore::checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& [name, t] : params_) {
    mix(name.data(), name.size());
    mix(t.values().data(), t.values().size() * sizeof(double));
  }
  return h;
}

void ParameterStore::set_values(const std::string& name, const std::vector<double>& values) {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw std::out_of_range("ParameterStore: no parameter '" + name + "'");
  }
  if (values.size() != it->second.values().size()) {
    throw std::invalid_argument("ParameterStore: size mismatch loading '" + name + "'");
  }
  it->second.mutable_values() = values;
}

}  // namespace sscr
