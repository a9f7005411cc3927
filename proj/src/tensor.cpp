#include "sscr/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace sscr {

namespace {

std::atomic<std::int64_t> g_next_node_id{1};

std::shared_ptr<detail::Node> make_node(Shape shape, std::vector<double> values) {
  auto n = std::make_shared<detail::Node>();
  n->shape = std::move(shape);
  n->values = std::move(values);
  n->id = g_next_node_id.fetch_add(1, std::memory_order_relaxed);
  return n;
}

[[noreturn]] void shape_error(const std::string& op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(op + ": incompatible shapes " + shape_str(a.shape()) +
                              " and " + shape_str(b.shape()));
}

[[noreturn]] void shape_error(const std::string& op, const Tensor& a, const std::string& want) {
  throw std::invalid_argument(op + ": got shape " + shape_str(a.shape()) + ", expected " + want);
}

double sigmoid_d(double x) {
  if (x >= 0.0) {
    double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

int shape_numel(const Shape& shape) {
  int n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

void detail::Node::ensure_grad() {
  if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
}

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  if (shape_numel(shape) != static_cast<int>(values.size())) {
    throw std::invalid_argument("Tensor::constant: " + shape_str(shape) + " needs " +
                                std::to_string(shape_numel(shape)) + " values, got " +
                                std::to_string(values.size()));
  }
  return Tensor(make_node(std::move(shape), std::move(values)));
}

Tensor Tensor::scalar(double v) { return constant({1}, {v}); }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto n = make_node(shape, std::vector<double>(static_cast<size_t>(shape_numel(shape)), 0.0));
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::param(Shape shape, std::vector<double> values) {
  Tensor t = constant(std::move(shape), std::move(values));
  t.node_->requires_grad = true;
  return t;
}

const std::vector<double>& Tensor::grad() const {
  node_->ensure_grad();
  return node_->grad;
}

std::vector<double>& Tensor::mutable_grad() {
  node_->ensure_grad();
  return node_->grad;
}

void Tensor::zero_grad() {
  node_->ensure_grad();
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

double Tensor::scalar_value() const {
  if (numel() != 1) shape_error("scalar_value", *this, "[1]");
  return node_->values[0];
}

bool Tensor::all_finite() const {
  for (double v : node_->values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor Tensor::detached() const {
  return constant(node_->shape, node_->values);
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw std::invalid_argument("backward: loss must be a defined scalar tensor");
  }
  auto root = loss.node();
  if (!root->requires_grad) {
    return;  // nothing reachable needs gradients
  }

  // Children-first topological order via iterative DFS.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, size_t>> stack;
  stack.emplace_back(root.get(), 0);
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* p = node->parents[next].get();
      ++next;
      if (p->requires_grad && seen.insert(p).second) {
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Interior (op) grads are transient per backward pass; only leaf grads
  // accumulate across calls.
  for (detail::Node* n : order) {
    if (n->backprop && !n->grad.empty()) std::fill(n->grad.begin(), n->grad.end(), 0.0);
  }

  root->ensure_grad();
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backprop) (*it)->backprop();
  }
}

// ---- op helpers ------------------------------------------------------------

namespace {

Tensor make_op(Shape shape, std::vector<double> values,
               std::vector<Tensor> inputs,
               std::function<void(detail::Node*)> backprop) {
  auto n = make_node(std::move(shape), std::move(values));
  bool needs = false;
  for (const auto& in : inputs) {
    n->parents.push_back(in.node());
    needs = needs || in.requires_grad();
  }
  n->requires_grad = needs;
  if (needs && backprop) {
    detail::Node* raw = n.get();
    n->backprop = [raw, fn = std::move(backprop)]() { fn(raw); };
  }
  return Tensor::wrap(std::move(n));
}

// Accumulate src into parent i's grad if it participates in the graph.
void accumulate(detail::Node* node, size_t i, const std::vector<double>& src) {
  auto& p = node->parents[i];
  if (!p->requires_grad) return;
  p->ensure_grad();
  for (size_t k = 0; k < src.size(); ++k) p->grad[k] += src[k];
}

bool parent_needs(detail::Node* node, size_t i) { return node->parents[i]->requires_grad; }

std::vector<double>& parent_grad(detail::Node* node, size_t i) {
  node->parents[i]->ensure_grad();
  return node->parents[i]->grad;
}

const std::vector<double>& parent_values(detail::Node* node, size_t i) {
  return node->parents[i]->values;
}

}  // namespace

// ---- elementwise -----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("add", a, b);
  std::vector<double> out(a.values());
  for (int i = 0; i < b.numel(); ++i) out[static_cast<size_t>(i)] += b.values()[static_cast<size_t>(i)];
  return make_op(a.shape(), std::move(out), {a, b}, [](detail::Node* n) {
    accumulate(n, 0, n->grad);
    accumulate(n, 1, n->grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("sub", a, b);
  std::vector<double> out(a.values());
  for (int i = 0; i < b.numel(); ++i) out[static_cast<size_t>(i)] -= b.values()[static_cast<size_t>(i)];
  return make_op(a.shape(), std::move(out), {a, b}, [](detail::Node* n) {
    accumulate(n, 0, n->grad);
    if (parent_needs(n, 1)) {
      auto& g = parent_grad(n, 1);
      for (size_t k = 0; k < n->grad.size(); ++k) g[k] -= n->grad[k];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("mul", a, b);
  std::vector<double> out(a.values());
  for (int i = 0; i < b.numel(); ++i) out[static_cast<size_t>(i)] *= b.values()[static_cast<size_t>(i)];
  return make_op(a.shape(), std::move(out), {a, b}, [](detail::Node* n) {
    if (parent_needs(n, 0)) {
      auto& g = parent_grad(n, 0);
      const auto& bv = parent_values(n, 1);
      for (size_t k = 0; k < n->grad.size(); ++k) g[k] += n->grad[k] * bv[k];
    }
    if (parent_needs(n, 1)) {
      auto& g = parent_grad(n, 1);
      const auto& av = parent_values(n, 0);
      for (size_t k = 0; k < n->grad.size(); ++k) g[k] += n->grad[k] * av[k];
    }
  });
}

Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.values());
  for (auto& v : out) v *= c;
  return make_op(a.shape(), std::move(out), {a}, [c](detail::Node* n) {
    if (parent_needs(n, 0)) {
      auto& g = parent_grad(n, 0);
      for (size_t k = 0; k < n->grad.size(); ++k) g[k] += c * n->grad[k];
    }
  });
}

// ---- matmul family ---------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  int ra = a.rank(), rb = b.rank();
  int n, k, m;
  if (ra == 2 && rb == 2) {
    n = a.dim(0); k = a.dim(1); m = b.dim(1);
    if (b.dim(0) != k) shape_error("matmul", a, b);
  } else if (ra == 1 && rb == 2) {
    n = 1; k = a.dim(0); m = b.dim(1);
    if (b.dim(0) != k) shape_error("matmul", a, b);
  } else if (ra == 2 && rb == 1) {
    n = a.dim(0); k = a.dim(1); m = 1;
    if (b.dim(0) != k) shape_error("matmul", a, b);
  } else {
    shape_error("matmul", a, b);
  }

  std::vector<double> out(static_cast<size_t>(n) * m, 0.0);
  const auto& av = a.values();
  const auto& bv = b.values();
  for (int i = 0; i < n; ++i) {
    for (int kk = 0; kk < k; ++kk) {
      double aik = av[static_cast<size_t>(i) * k + kk];
      if (aik == 0.0) continue;
      const double* brow = bv.data() + static_cast<size_t>(kk) * m;
      double* orow = out.data() + static_cast<size_t>(i) * m;
      for (int j = 0; j < m; ++j) orow[j] += aik * brow[j];
    }
  }

  Shape out_shape;
  if (ra == 2 && rb == 2) out_shape = {n, m};
  else if (ra == 1) out_shape = {m};
  else out_shape = {n};

  return make_op(std::move(out_shape), std::move(out), {a, b}, [n, k, m](detail::Node* nd) {
    const auto& g = nd->grad;  // n x m
    if (parent_needs(nd, 0)) {
      auto& ga = parent_grad(nd, 0);
      const auto& bv = parent_values(nd, 1);
      // dA = G B^T
      for (int i = 0; i < n; ++i) {
        for (int kk = 0; kk < k; ++kk) {
          double s = 0.0;
          const double* grow = g.data() + static_cast<size_t>(i) * m;
          const double* brow = bv.data() + static_cast<size_t>(kk) * m;
          for (int j = 0; j < m; ++j) s += grow[j] * brow[j];
          ga[static_cast<size_t>(i) * k + kk] += s;
        }
      }
    }
    if (parent_needs(nd, 1)) {
      auto& gb = parent_grad(nd, 1);
      const auto& av = parent_values(nd, 0);
      // dB = A^T G
      for (int kk = 0; kk < k; ++kk) {
        for (int i = 0; i < n; ++i) {
          double aik = av[static_cast<size_t>(i) * k + kk];
          if (aik == 0.0) continue;
          const double* grow = g.data() + static_cast<size_t>(i) * m;
          double* brow = gb.data() + static_cast<size_t>(kk) * m;
          for (int j = 0; j < m; ++j) brow[j] += aik * grow[j];
        }
      }
    }
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1)) shape_error("matmul_nt", a, b);
  int n = a.dim(0), k = a.dim(1), m = b.dim(0);
  std::vector<double> out(static_cast<size_t>(n) * m, 0.0);
  const auto& av = a.values();
  const auto& bv = b.values();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      const double* arow = av.data() + static_cast<size_t>(i) * k;
      const double* brow = bv.data() + static_cast<size_t>(j) * k;
      for (int kk = 0; kk < k; ++kk) s += arow[kk] * brow[kk];
      out[static_cast<size_t>(i) * m + j] = s;
    }
  }
  return make_op({n, m}, std::move(out), {a, b}, [n, k, m](detail::Node* nd) {
    const auto& g = nd->grad;
    if (parent_needs(nd, 0)) {
      auto& ga = parent_grad(nd, 0);
      const auto& bv = parent_values(nd, 1);
      // dA = G B
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
          double gij = g[static_cast<size_t>(i) * m + j];
          if (gij == 0.0) continue;
          const double* brow = bv.data() + static_cast<size_t>(j) * k;
          double* arow = ga.data() + static_cast<size_t>(i) * k;
          for (int kk = 0; kk < k; ++kk) arow[kk] += gij * brow[kk];
        }
      }
    }
    if (parent_needs(nd, 1)) {
      auto& gb = parent_grad(nd, 1);
      const auto& av = parent_values(nd, 0);
      // dB = G^T A
      for (int j = 0; j < m; ++j) {
        for (int i = 0; i < n; ++i) {
          double gij = g[static_cast<size_t>(i) * m + j];
          if (gij == 0.0) continue;
          const double* arow = av.data() + static_cast<size_t>(i) * k;
          double* brow = gb.data() + static_cast<size_t>(j) * k;
          for (int kk = 0; kk < k; ++kk) brow[kk] += gij * arow[kk];
        }
      }
    }
  });
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (w.rank() != 2) shape_error("affine weight", w, "[in,out]");
  int k = w.dim(0), m = w.dim(1);
  if (b.rank() != 1 || b.dim(0) != m) shape_error("affine bias", b, "[" + std::to_string(m) + "]");
  int n;
  if (x.rank() == 1) {
    if (x.dim(0) != k) shape_error("affine", x, w);
    n = 1;
  } else if (x.rank() == 2) {
    if (x.dim(1) != k) shape_error("affine", x, w);
    n = x.dim(0);
  } else {
    shape_error("affine", x, "rank 1 or 2");
  }

  std::vector<double> out(static_cast<size_t>(n) * m);
  const auto& xv = x.values();
  const auto& wv = w.values();
  const auto& bv = b.values();
  for (int i = 0; i < n; ++i) {
    double* orow = out.data() + static_cast<size_t>(i) * m;
    for (int j = 0; j < m; ++j) orow[j] = bv[static_cast<size_t>(j)];
    for (int kk = 0; kk < k; ++kk) {
      double xik = xv[static_cast<size_t>(i) * k + kk];
      if (xik == 0.0) continue;
      const double* wrow = wv.data() + static_cast<size_t>(kk) * m;
      for (int j = 0; j < m; ++j) orow[j] += xik * wrow[j];
    }
  }

  Shape out_shape = (x.rank() == 1) ? Shape{m} : Shape{n, m};
  return make_op(std::move(out_shape), std::move(out), {x, w, b}, [n, k, m](detail::Node* nd) {
    const auto& g = nd->grad;
    if (parent_needs(nd, 0)) {
      auto& gx = parent_grad(nd, 0);
      const auto& wv = parent_values(nd, 1);
      for (int i = 0; i < n; ++i) {
        for (int kk = 0; kk < k; ++kk) {
          double s = 0.0;
          const double* grow = g.data() + static_cast<size_t>(i) * m;
          const double* wrow = wv.data() + static_cast<size_t>(kk) * m;
          for (int j = 0; j < m; ++j) s += grow[j] * wrow[j];
          gx[static_cast<size_t>(i) * k + kk] += s;
        }
      }
    }
    if (parent_needs(nd, 1)) {
      auto& gw = parent_grad(nd, 1);
      const auto& xv = parent_values(nd, 0);
      for (int kk = 0; kk < k; ++kk) {
        for (int i = 0; i < n; ++i) {
          double xik = xv[static_cast<size_t>(i) * k + kk];
          if (xik == 0.0) continue;
          const double* grow = g.data() + static_cast<size_t>(i) * m;
          double* wrow = gw.data() + static_cast<size_t>(kk) * m;
          for (int j = 0; j < m; ++j) wrow[j] += xik * grow[j];
        }
      }
    }
    if (parent_needs(nd, 2)) {
      auto& gb = parent_grad(nd, 2);
      for (int i = 0; i < n; ++i) {
        const double* grow = nd->grad.data() + static_cast<size_t>(i) * m;
        for (int j = 0; j < m; ++j) gb[static_cast<size_t>(j)] += grow[j];
      }
    }
  });
}

// ---- structure ops ---------------------------------------------------------

Tensor concat(const Tensor& a, const Tensor& b) {
  if (a.rank() != 1 || b.rank() != 1) shape_error("concat", a, b);
  std::vector<double> out(a.values());
  out.insert(out.end(), b.values().begin(), b.values().end());
  int p = a.dim(0);
  return make_op({a.dim(0) + b.dim(0)}, std::move(out), {a, b}, [p](detail::Node* n) {
    if (parent_needs(n, 0)) {
      auto& g = parent_grad(n, 0);
      for (int i = 0; i < p; ++i) g[static_cast<size_t>(i)] += n->grad[static_cast<size_t>(i)];
    }
    if (parent_needs(n, 1)) {
      auto& g = parent_grad(n, 1);
      for (size_t i = static_cast<size_t>(p); i < n->grad.size(); ++i) g[i - p] += n->grad[i];
    }
  });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(0) != b.dim(0)) shape_error("concat_cols", a, b);
  int n = a.dim(0), p = a.dim(1), q = b.dim(1);
  std::vector<double> out(static_cast<size_t>(n) * (p + q));
  for (int i = 0; i < n; ++i) {
    std::copy_n(a.values().data() + static_cast<size_t>(i) * p, p,
                out.data() + static_cast<size_t>(i) * (p + q));
    std::copy_n(b.values().data() + static_cast<size_t>(i) * q, q,
                out.data() + static_cast<size_t>(i) * (p + q) + p);
  }
  return make_op({n, p + q}, std::move(out), {a, b}, [n, p, q](detail::Node* nd) {
    for (int i = 0; i < n; ++i) {
      const double* grow = nd->grad.data() + static_cast<size_t>(i) * (p + q);
      if (parent_needs(nd, 0)) {
        auto& g = parent_grad(nd, 0);
        for (int j = 0; j < p; ++j) g[static_cast<size_t>(i) * p + j] += grow[j];
      }
      if (parent_needs(nd, 1)) {
        auto& g = parent_grad(nd, 1);
        for (int j = 0; j < q; ++j) g[static_cast<size_t>(i) * q + j] += grow[p + j];
      }
    }
  });
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1)) shape_error("concat_rows", a, b);
  int p = a.dim(0), q = b.dim(0), m = a.dim(1);
  std::vector<double> out;
  out.reserve(static_cast<size_t>(p + q) * m);
  out.insert(out.end(), a.values().begin(), a.values().end());
  out.insert(out.end(), b.values().begin(), b.values().end());
  return make_op({p + q, m}, std::move(out), {a, b}, [p, q, m](detail::Node* nd) {
    size_t split = static_cast<size_t>(p) * m;
    if (parent_needs(nd, 0)) {
      auto& g = parent_grad(nd, 0);
      for (size_t i = 0; i < split; ++i) g[i] += nd->grad[i];
    }
    if (parent_needs(nd, 1)) {
      auto& g = parent_grad(nd, 1);
      for (size_t i = 0; i < static_cast<size_t>(q) * m; ++i) g[i] += nd->grad[split + i];
    }
  });
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: empty input");
  int d = rows[0].dim(0);
  for (const auto& r : rows) {
    if (r.rank() != 1 || r.dim(0) != d) shape_error("stack_rows", r, "[" + std::to_string(d) + "]");
  }
  int r = static_cast<int>(rows.size());
  std::vector<double> out;
  out.reserve(static_cast<size_t>(r) * d);
  for (const auto& t : rows) out.insert(out.end(), t.values().begin(), t.values().end());
  return make_op({r, d}, std::move(out), rows, [d](detail::Node* nd) {
    for (size_t i = 0; i < nd->parents.size(); ++i) {
      if (!parent_needs(nd, i)) continue;
      auto& g = parent_grad(nd, i);
      const double* grow = nd->grad.data() + i * static_cast<size_t>(d);
      for (int j = 0; j < d; ++j) g[static_cast<size_t>(j)] += grow[j];
    }
  });
}

Tensor broadcast_rows(const Tensor& v, int n) {
  if (v.rank() != 1) shape_error("broadcast_rows", v, "rank 1");
  int d = v.dim(0);
  std::vector<double> out(static_cast<size_t>(n) * d);
  for (int i = 0; i < n; ++i)
    std::copy_n(v.values().data(), d, out.data() + static_cast<size_t>(i) * d);
  return make_op({n, d}, std::move(out), {v}, [n, d](detail::Node* nd) {
    if (!parent_needs(nd, 0)) return;
    auto& g = parent_grad(nd, 0);
    for (int i = 0; i < n; ++i) {
      const double* grow = nd->grad.data() + static_cast<size_t>(i) * d;
      for (int j = 0; j < d; ++j) g[static_cast<size_t>(j)] += grow[j];
    }
  });
}

Tensor select_row(const Tensor& m, int row) {
  if (m.rank() != 2) shape_error("select_row", m, "rank 2");
  if (row < 0 || row >= m.dim(0)) {
    throw std::out_of_range("select_row: row " + std::to_string(row) + " of " + shape_str(m.shape()));
  }
  int d = m.dim(1);
  std::vector<double> out(m.values().begin() + static_cast<size_t>(row) * d,
                          m.values().begin() + static_cast<size_t>(row + 1) * d);
  return make_op({d}, std::move(out), {m}, [row, d](detail::Node* nd) {
    if (!parent_needs(nd, 0)) return;
    auto& g = parent_grad(nd, 0);
    for (int j = 0; j < d; ++j) g[static_cast<size_t>(row) * d + j] += nd->grad[static_cast<size_t>(j)];
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    shape_error("reshape", x, shape_str(shape) + " (same element count)");
  }
  std::vector<double> out(x.values());
  return make_op(std::move(shape), std::move(out), {x}, [](detail::Node* nd) {
    accumulate(nd, 0, nd->grad);
  });
}

Tensor permute_gather(const Tensor& x, const std::vector<int>& index, Shape out_shape) {
  if (shape_numel(out_shape) != static_cast<int>(index.size())) {
    throw std::invalid_argument("permute_gather: index size " + std::to_string(index.size()) +
                                " does not match out shape " + shape_str(out_shape));
  }
  std::vector<double> out(index.size());
  for (size_t i = 0; i < index.size(); ++i) out[i] = x.values()[static_cast<size_t>(index[i])];
  return make_op(std::move(out_shape), std::move(out), {x}, [index](detail::Node* nd) {
    if (!parent_needs(nd, 0)) return;
    auto& g = parent_grad(nd, 0);
    for (size_t i = 0; i < index.size(); ++i) g[static_cast<size_t>(index[i])] += nd->grad[i];
  });
}

// ---- nonlinearities ---------------------------------------------------------

Tensor tanh_t(const Tensor& x) {
  std::vector<double> out(x.values());
  for (auto& v : out) v = std::tanh(v);
  return make_op(x.shape(), std::move(out), {x}, [](detail::Node* nd) {
    if (!parent_needs(nd, 0)) return;
    auto& g = parent_grad(nd, 0);
    for (size_t k = 0; k < nd->grad.size(); ++k) {
      double y = nd->values[k];
      g[k] += nd->grad[k] * (1.0 - y * y);
    }
  });
}

Tensor sigmoid_t(const Tensor& x) {
  std::vector<double> out(x.values());
  for (auto& v : out) v = sigmoid_d(v);
  return make_op(x.shape(), std::move(out), {x}, [](detail::Node* nd) {
    if (!parent_needs(nd, 0)) return;
    auto& g = parent_grad(nd, 0);
    for (size_t k = 0; k < nd->grad.size(); ++k) {
      double y = nd->values[k];
      g[k] += nd->grad[k] * y * (1.0 - y);
    }
  });
}

Tensor relu_t(const Tensor& x) {
  std::vector<double> out(x.values());
  for (auto& v : out) v = v > 0.0 ? v : 0.0;
  return make_op(x.shape(), std::move(out), {x}, [](detail::Node* nd) {
    if (!parent_needs(nd, 0)) return;
    auto& g = parent_grad(nd, 0);
    const auto& xv = parent_values(nd, 0);
    for (size_t k = 0; k < nd->grad.size(); ++k) {
      if (xv[k] > 0.0) g[k] += nd->grad[k];
    }
  });
}

Tensor softplus_t(const Tensor& x) {
  std::vector<double> out(x.values());
  for (auto& v : out) {
    // log(1 + e^v), stable on both tails
    v = v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
  }
  return make_op(x.shape(), std::move(out), {x}, [](detail::Node* nd) {
    if (!parent_needs(nd, 0)) return;
    auto& g = parent_grad(nd, 0);
    const auto& xv = parent_values(nd, 0);
    for (size_t k = 0; k < nd->grad.size(); ++k) g[k] += nd->grad[k] * sigmoid_d(xv[k]);
  });
}

// ---- softmax / losses -------------------------------------------------------

namespace {

void softmax_inplace(double* x, int n) {
  double mx = x[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, x[i]);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    x[i] = std::exp(x[i] - mx);
    sum += x[i];
  }
  for (int i = 0; i < n; ++i) x[i] /= sum;
}

}  // namespace

Tensor softmax_vec(const Tensor& x) {
  if (x.rank() != 1) shape_error("softmax_vec", x, "rank 1");
  std::vector<double> out(x.values());
  softmax_inplace(out.data(), x.dim(0));
  return make_op(x.shape(), std::move(out), {x}, [](detail::Node* nd) {
    if (!parent_needs(nd, 0)) return;
    auto& g = parent_grad(nd, 0);
    double dot = 0.0;
    for (size_t k = 0; k < nd->grad.size(); ++k) dot += nd->grad[k] * nd->values[k];
    for (size_t k = 0; k < nd->grad.size(); ++k) g[k] += nd->values[k] * (nd->grad[k] - dot);
  });
}

Tensor row_softmax(const Tensor& x) {
  if (x.rank() != 2) shape_error("row_softmax", x, "rank 2");
  int n = x.dim(0), m = x.dim(1);
  std::vector<double> out(x.values());
  for (int i = 0; i < n; ++i) softmax_inplace(out.data() + static_cast<size_t>(i) * m, m);
  return make_op(x.shape(), std::move(out), {x}, [n, m](detail::Node* nd) {
    if (!parent_needs(nd, 0)) return;
    auto& g = parent_grad(nd, 0);
    for (int i = 0; i < n; ++i) {
      const double* y = nd->values.data() + static_cast<size_t>(i) * m;
      const double* gy = nd->grad.data() + static_cast<size_t>(i) * m;
      double dot = 0.0;
      for (int j = 0; j < m; ++j) dot += gy[j] * y[j];
      double* gx = g.data() + static_cast<size_t>(i) * m;
      for (int j = 0; j < m; ++j) gx[j] += y[j] * (gy[j] - dot);
    }
  });
}

Tensor cross_entropy_logits(const Tensor& logits, int target) {
  if (logits.rank() != 1) shape_error("cross_entropy_logits", logits, "rank 1");
  int n = logits.dim(0);
  if (target < 0 || target >= n) {
    throw std::out_of_range("cross_entropy_logits: target " + std::to_string(target) +
                            " outside " + shape_str(logits.shape()));
  }
  const auto& lv = logits.values();
  double mx = lv[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, lv[static_cast<size_t>(i)]);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += std::exp(lv[static_cast<size_t>(i)] - mx);
  double loss = std::log(sum) + mx - lv[static_cast<size_t>(target)];
  return make_op({1}, {loss}, {logits}, [n, target](detail::Node* nd) {
    if (!parent_needs(nd, 0)) return;
    auto& g = parent_grad(nd, 0);
    const auto& lv = parent_values(nd, 0);
    std::vector<double> p(lv);
    softmax_inplace(p.data(), n);
    double go = nd->grad[0];
    for (int i = 0; i < n; ++i) g[static_cast<size_t>(i)] += go * p[static_cast<size_t>(i)];
    g[static_cast<size_t>(target)] -= go;
  });
}

Tensor bce_with_logits(const Tensor& logit, double target) {
  if (logit.numel() != 1) shape_error("bce_with_logits", logit, "[1]");
  double x = logit.values()[0];
  // max(x,0) - x*t + log(1 + e^-|x|)
  double loss = std::max(x, 0.0) - x * target + std::log1p(std::exp(-std::abs(x)));
  return make_op({1}, {loss}, {logit}, [target](detail::Node* nd) {
    if (!parent_needs(nd, 0)) return;
    auto& g = parent_grad(nd, 0);
    double x = parent_values(nd, 0)[0];
    g[0] += nd->grad[0] * (sigmoid_d(x) - target);
  });
}

Tensor sum_all(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  return make_op({1}, {s}, {x}, [](detail::Node* nd) {
    if (!parent_needs(nd, 0)) return;
    auto& g = parent_grad(nd, 0);
    for (auto& v : g) v += nd->grad[0];
  });
}

Tensor mean_all(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  double inv = 1.0 / static_cast<double>(x.numel());
  return make_op({1}, {s * inv}, {x}, [inv](detail::Node* nd) {
    if (!parent_needs(nd, 0)) return;
    auto& g = parent_grad(nd, 0);
    for (auto& v : g) v += nd->grad[0] * inv;
  });
}

// ---- fused recurrent cell ----------------------------------------------------

Tensor gru_cell(const Tensor& x, const Tensor& h,
                const Tensor& wz, const Tensor& uz, const Tensor& bz,
                const Tensor& wr, const Tensor& ur, const Tensor& br,
                const Tensor& wn, const Tensor& un, const Tensor& bn) {
  if (x.rank() != 1 || h.rank() != 1) shape_error("gru_cell", x, h);
  int xd = x.dim(0), hd = h.dim(0);
  auto check_w = [&](const Tensor& w, int in, const char* name) {
    if (w.rank() != 2 || w.dim(0) != in || w.dim(1) != hd) {
      shape_error(std::string("gru_cell ") + name, w,
                  "[" + std::to_string(in) + "," + std::to_string(hd) + "]");
    }
  };
  check_w(wz, xd, "wz"); check_w(uz, hd, "uz");
  check_w(wr, xd, "wr"); check_w(ur, hd, "ur");
  check_w(wn, xd, "wn"); check_w(un, hd, "un");
  for (const Tensor* b : {&bz, &br, &bn}) {
    if (b->rank() != 1 || b->dim(0) != hd) shape_error("gru_cell bias", *b, "[" + std::to_string(hd) + "]");
  }

  const auto& xv = x.values();
  const auto& hv = h.values();
  auto gate = [&](const Tensor& w, const Tensor& u, const Tensor& b,
                  const std::vector<double>& hin) {
    std::vector<double> a(b.values());
    const auto& wv = w.values();
    for (int i = 0; i < xd; ++i) {
      double xi = xv[static_cast<size_t>(i)];
      if (xi == 0.0) continue;
      const double* wrow = wv.data() + static_cast<size_t>(i) * hd;
      for (int j = 0; j < hd; ++j) a[static_cast<size_t>(j)] += xi * wrow[j];
    }
    const auto& uv = u.values();
    for (int i = 0; i < hd; ++i) {
      double hi = hin[static_cast<size_t>(i)];
      if (hi == 0.0) continue;
      const double* urow = uv.data() + static_cast<size_t>(i) * hd;
      for (int j = 0; j < hd; ++j) a[static_cast<size_t>(j)] += hi * urow[j];
    }
    return a;
  };

  std::vector<double> z = gate(wz, uz, bz, hv);
  std::vector<double> r = gate(wr, ur, br, hv);
  for (auto& v : z) v = sigmoid_d(v);
  for (auto& v : r) v = sigmoid_d(v);
  std::vector<double> rh(static_cast<size_t>(hd));
  for (int j = 0; j < hd; ++j) rh[static_cast<size_t>(j)] = r[static_cast<size_t>(j)] * hv[static_cast<size_t>(j)];
  std::vector<double> nact = gate(wn, un, bn, rh);
  for (auto& v : nact) v = std::tanh(v);
  std::vector<double> out(static_cast<size_t>(hd));
  for (int j = 0; j < hd; ++j) {
    out[static_cast<size_t>(j)] =
        (1.0 - z[static_cast<size_t>(j)]) * nact[static_cast<size_t>(j)] +
        z[static_cast<size_t>(j)] * hv[static_cast<size_t>(j)];
  }

  // parents: 0=x 1=h 2=wz 3=uz 4=bz 5=wr 6=ur 7=br 8=wn 9=un 10=bn
  return make_op({hd}, std::move(out), {x, h, wz, uz, bz, wr, ur, br, wn, un, bn},
                 [xd, hd, z = std::move(z), r = std::move(r), nact = std::move(nact),
                  rh = std::move(rh)](detail::Node* nd) {
    const auto& g = nd->grad;
    const auto& xv = parent_values(nd, 0);
    const auto& hv = parent_values(nd, 1);

    std::vector<double> dz(static_cast<size_t>(hd)), dn(static_cast<size_t>(hd)),
        dh(static_cast<size_t>(hd), 0.0), dx(static_cast<size_t>(xd), 0.0);
    for (int j = 0; j < hd; ++j) {
      size_t sj = static_cast<size_t>(j);
      dz[sj] = g[sj] * (hv[sj] - nact[sj]);
      dn[sj] = g[sj] * (1.0 - z[sj]);
      dh[sj] = g[sj] * z[sj];
    }

    // Backprop through one pre-activation: a = x W + hin U + b.
    auto gate_back = [&](size_t wi, size_t ui, size_t bi, const std::vector<double>& da,
                         const std::vector<double>& hin, std::vector<double>* dhin) {
      if (parent_needs(nd, wi)) {
        auto& gw = parent_grad(nd, wi);
        for (int i = 0; i < xd; ++i) {
          double xi = xv[static_cast<size_t>(i)];
          if (xi == 0.0) continue;
          double* row = gw.data() + static_cast<size_t>(i) * hd;
          for (int j = 0; j < hd; ++j) row[j] += xi * da[static_cast<size_t>(j)];
        }
      }
      if (parent_needs(nd, ui)) {
        auto& gu = parent_grad(nd, ui);
        for (int i = 0; i < hd; ++i) {
          double hi = hin[static_cast<size_t>(i)];
          if (hi == 0.0) continue;
          double* row = gu.data() + static_cast<size_t>(i) * hd;
          for (int j = 0; j < hd; ++j) row[j] += hi * da[static_cast<size_t>(j)];
        }
      }
      if (parent_needs(nd, bi)) {
        auto& gb = parent_grad(nd, bi);
        for (int j = 0; j < hd; ++j) gb[static_cast<size_t>(j)] += da[static_cast<size_t>(j)];
      }
      if (parent_needs(nd, 0)) {
        const auto& wv = parent_values(nd, wi);
        for (int i = 0; i < xd; ++i) {
          const double* wrow = wv.data() + static_cast<size_t>(i) * hd;
          double s = 0.0;
          for (int j = 0; j < hd; ++j) s += wrow[j] * da[static_cast<size_t>(j)];
          dx[static_cast<size_t>(i)] += s;
        }
      }
      if (dhin) {
        const auto& uv = parent_values(nd, ui);
        for (int i = 0; i < hd; ++i) {
          const double* urow = uv.data() + static_cast<size_t>(i) * hd;
          double s = 0.0;
          for (int j = 0; j < hd; ++j) s += urow[j] * da[static_cast<size_t>(j)];
          (*dhin)[static_cast<size_t>(i)] += s;
        }
      }
    };

    // candidate gate: an = x Wn + (r*h) Un + bn, n = tanh(an)
    std::vector<double> dan(static_cast<size_t>(hd)), drh(static_cast<size_t>(hd), 0.0);
    for (int j = 0; j < hd; ++j) {
      size_t sj = static_cast<size_t>(j);
      dan[sj] = dn[sj] * (1.0 - nact[sj] * nact[sj]);
    }
    gate_back(8, 9, 10, dan, rh, &drh);
    std::vector<double> dr(static_cast<size_t>(hd));
    for (int j = 0; j < hd; ++j) {
      size_t sj = static_cast<size_t>(j);
      dr[sj] = drh[sj] * hv[sj];
      dh[sj] += drh[sj] * r[sj];
    }

    // reset gate
    std::vector<double> dar(static_cast<size_t>(hd));
    for (int j = 0; j < hd; ++j) {
      size_t sj = static_cast<size_t>(j);
      dar[sj] = dr[sj] * r[sj] * (1.0 - r[sj]);
    }
    gate_back(5, 6, 7, dar, hv, &dh);

    // update gate
    std::vector<double> daz(static_cast<size_t>(hd));
    for (int j = 0; j < hd; ++j) {
      size_t sj = static_cast<size_t>(j);
      daz[sj] = dz[sj] * z[sj] * (1.0 - z[sj]);
    }
    gate_back(2, 3, 4, daz, hv, &dh);

    accumulate(nd, 0, dx);
    accumulate(nd, 1, dh);
  });
}

}  // namespace sscr
