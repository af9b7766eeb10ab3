#pragma once

#include "changecap/types.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace changecap {

class Tensor;

// One recorded node of the forward graph. Nodes are created in program order;
// `seq` is the recording index, and backward replays the recorded rules in
// decreasing `seq`, so every reachable node is processed exactly once after
// all of its consumers.
struct TensorNode {
  Mat value;   // storage: rank 0 -> 1x1, rank 1 -> 1xn, rank 2 -> mxn
  Mat grad;    // empty until a backward pass touches this node
  Shape shape;
  bool requires_grad = false;
  bool is_leaf = true;
  bool backward_done = false;
  std::uint64_t seq = 0;
  std::string name;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward_rule;

  Mat& ensure_grad() {
    if (grad.size() == 0) grad = Mat::Zero(value.rows(), value.cols());
    return grad;
  }
};

// Value-semantic handle to a graph node. Copies share the node.
class Tensor {
 public:
  Tensor() = default;

  // Constants (requires_grad = false).
  static Tensor scalar(Real v);
  static Tensor vector(const Vec& v);
  static Tensor vector(std::initializer_list<Real> v);
  static Tensor matrix(const Mat& m);
  static Tensor zeros(const Shape& shape);
  static Tensor full(const Shape& shape, Real v);

  // Learnable leaves.
  static Tensor param(const Mat& m, std::string name);
  static Tensor param_vector(const Vec& v, std::string name);

  bool valid() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  Index rank() const { return static_cast<Index>(node_->shape.size()); }
  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  Index numel() const { return node_->value.size(); }

  const Mat& value() const { return node_->value; }
  Mat& mutable_value() { return node_->value; }
  const Mat& grad() const { return node_->grad; }
  bool has_grad() const { return node_->grad.size() != 0; }
  Real item() const;

  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return node_->is_leaf; }
  const std::string& name() const { return node_->name; }
  void set_name(std::string n) { node_->name = std::move(n); }

  void zero_grad() { node_->grad.resize(0, 0); }

  std::shared_ptr<TensorNode> node() const { return node_; }
  explicit Tensor(std::shared_ptr<TensorNode> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<TensorNode> node_;
};

// While alive, ops do not record backward rules (cheap inference).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Elementwise; shapes must match.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& x, Real c);
Tensor add_scalar(const Tensor& x, Real c);

// c[i,j] = sum_t a[i,t] * b[t,j]. Accepts rank-2 x rank-2 and rank-1 x rank-2.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);

Tensor sigmoid(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor pointwise(const Tensor& x, Activation f);

// Row-stable softmax: per-row max subtraction before exponentiation.
Tensor softmax_rows(const Tensor& x);

Tensor log(const Tensor& x);
Tensor clamp(const Tensor& x, Real lo, Real hi);

Tensor concat_cols(const std::vector<Tensor>& xs);
Tensor concat_rows(const std::vector<Tensor>& xs);
Tensor slice_cols(const Tensor& x, Index start, Index n);
Tensor select_row(const Tensor& x, Index i);  // -> rank-1 row copy

// x[N x C] with per-row addition of rank-1 b[C].
Tensor add_row_broadcast(const Tensor& x, const Tensor& b);

Tensor colwise_mean(const Tensor& x);  // -> rank-1 of length cols
Tensor sum(const Tensor& x);           // -> rank-0

Tensor reshape(const Tensor& x, const Shape& shape);
Tensor as_vector(const Tensor& x);  // reshape any single-row/column to rank-1

// -log softmax(logits)[target]; logits is rank-1.
Tensor cross_entropy_logits(const Tensor& logits, Index target);

// Propagates d(root)/d(leaf) into every reachable requires_grad leaf.
// Gradients accumulate additively across fan-out and across calls; callers
// reset leaves between optimization steps. Returns the touched leaves.
std::vector<Tensor> backward(const Tensor& root);

}  // namespace changecap
