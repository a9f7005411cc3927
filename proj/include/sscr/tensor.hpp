#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace sscr {

using Shape = std::vector<int>;

int shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until first backward touches this node
  bool requires_grad = false;
  std::int64_t id = 0;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void()> backprop;  // pushes this->grad into parents' grads

  void ensure_grad();
};

}  // namespace detail

// Dense 64-bit tensor participating in a dynamically recorded computation
// graph. Copies are handles to the same node; ops build new nodes that keep
// their inputs alive. Leaf gradients accumulate across backward calls until
// explicitly zeroed; interior grads are recomputed per pass.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor scalar(double v);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  // A trainable leaf (requires_grad set).
  static Tensor param(Shape shape, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int numel() const { return static_cast<int>(node_->values.size()); }
  int dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  bool requires_grad() const { return node_->requires_grad; }
  std::int64_t node_id() const { return node_->id; }

  const std::vector<double>& values() const { return node_->values; }
  std::vector<double>& mutable_values() { return node_->values; }
  const std::vector<double>& grad() const;
  std::vector<double>& mutable_grad();
  void zero_grad();
  double scalar_value() const;
  bool all_finite() const;

  // Value copy cut off from the recorded graph.
  Tensor detached() const;

  std::shared_ptr<detail::Node> node() const { return node_; }
  static Tensor wrap(std::shared_ptr<detail::Node> n) { return Tensor(std::move(n)); }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::Node> node_;
};

// Reverse-mode pass from a scalar loss. Reachable leaf grads accumulate;
// repeated calls without zeroing keep accumulating.
void backward(const Tensor& loss);

// ---- primitives -----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);

// matmul supports [n,k]x[k,m] -> [n,m], [k]x[k,m] -> [m], [n,k]x[k] -> [n].
Tensor matmul(const Tensor& a, const Tensor& b);
// a [n,k] times b-transposed where b is [m,k]; result [n,m].
Tensor matmul_nt(const Tensor& a, const Tensor& b);
// x [k] or [n,k], w [k,m], bias [m].
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);

Tensor concat(const Tensor& a, const Tensor& b);            // rank-1
Tensor concat_cols(const Tensor& a, const Tensor& b);       // [n,p],[n,q] -> [n,p+q]
Tensor concat_rows(const Tensor& a, const Tensor& b);       // [p,m],[q,m] -> [p+q,m]
Tensor stack_rows(const std::vector<Tensor>& rows);         // r x [d] -> [r,d]
Tensor broadcast_rows(const Tensor& v, int n);              // [d] -> [n,d]
Tensor select_row(const Tensor& m, int row);                // [r,d] -> [d]
Tensor reshape(const Tensor& x, Shape shape);

Tensor tanh_t(const Tensor& x);
Tensor sigmoid_t(const Tensor& x);
Tensor relu_t(const Tensor& x);
Tensor softplus_t(const Tensor& x);

Tensor softmax_vec(const Tensor& x);   // rank-1
Tensor row_softmax(const Tensor& x);   // rank-2, softmax per row

// -log softmax(logits)[target]; stable.
Tensor cross_entropy_logits(const Tensor& logits, int target);
// Binary cross-entropy on a scalar logit against target in {0,1}; stable.
Tensor bce_with_logits(const Tensor& logit, double target);

Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);

// Standard update/reset-gate recurrent cell, fused into one graph node.
//   z = sigmoid(x Wz + h Uz + bz)
//   r = sigmoid(x Wr + h Ur + br)
//   n = tanh(x Wn + (r*h) Un + bn)
//   h' = (1-z)*n + z*h
Tensor gru_cell(const Tensor& x, const Tensor& h,
                const Tensor& wz, const Tensor& uz, const Tensor& bz,
                const Tensor& wr, const Tensor& ur, const Tensor& br,
                const Tensor& wn, const Tensor& un, const Tensor& bn);

// Pure data movement: out[i] = x[index[i]]. Gradient scatter-adds back.
Tensor permute_gather(const Tensor& x, const std::vector<int>& index, Shape out_shape);

}  // namespace sscr
