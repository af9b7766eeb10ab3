#include "changecap/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace changecap {

namespace {

thread_local std::uint64_t g_seq = 0;
thread_local bool g_grad_enabled = true;

std::pair<Index, Index> storage_dims(const Shape& shape) {
  switch (shape.size()) {
    case 0:
      return {1, 1};
    case 1:
      return {1, shape[0]};
    case 2:
      return {shape[0], shape[1]};
    default:
      throw std::invalid_argument("tensor: rank > 2 is not supported");
  }
}

std::string shape_str(const Shape& shape) {
  if (shape.empty()) return "[scalar]";
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

void check_positive_extents(const Shape& shape) {
  for (Index e : shape) {
    if (e <= 0) throw std::invalid_argument("tensor: non-positive extent in " + shape_str(shape));
  }
}

Tensor make_leaf(Mat value, Shape shape, bool requires_grad, std::string name) {
  check_positive_extents(shape);
  auto node = std::make_shared<TensorNode>();
  node->value = std::move(value);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  node->is_leaf = true;
  node->seq = ++g_seq;
  node->name = std::move(name);
  return Tensor(node);
}

Tensor make_node(Mat value, Shape shape, std::vector<Tensor> parents,
                 std::function<void(TensorNode&)> rule) {
  auto node = std::make_shared<TensorNode>();
  node->value = std::move(value);
  node->shape = std::move(shape);
  node->is_leaf = false;
  node->seq = ++g_seq;
  bool rg = false;
  if (g_grad_enabled) {
    for (const Tensor& p : parents) rg = rg || p.requires_grad();
  }
  node->requires_grad = rg;
  if (rg) {
    node->parents.reserve(parents.size());
    for (const Tensor& p : parents) node->parents.push_back(p.node());
    node->backward_rule = std::move(rule);
  }
  return Tensor(node);
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
  }
}

Real stable_sigmoid(Real x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const Real e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor Tensor::scalar(Real v) {
  Mat m(1, 1);
  m(0, 0) = v;
  return make_leaf(std::move(m), {}, false, {});
}

Tensor Tensor::vector(const Vec& v) {
  Mat m = v.transpose();
  return make_leaf(std::move(m), {v.size()}, false, {});
}

Tensor Tensor::vector(std::initializer_list<Real> v) {
  Mat m(1, static_cast<Index>(v.size()));
  Index j = 0;
  for (Real x : v) m(0, j++) = x;
  return make_leaf(std::move(m), {static_cast<Index>(v.size())}, false, {});
}

Tensor Tensor::matrix(const Mat& m) { return make_leaf(m, {m.rows(), m.cols()}, false, {}); }

Tensor Tensor::zeros(const Shape& shape) { return full(shape, 0.0); }

Tensor Tensor::full(const Shape& shape, Real v) {
  check_positive_extents(shape);
  auto [r, c] = storage_dims(shape);
  return make_leaf(Mat::Constant(r, c, v), shape, false, {});
}

Tensor Tensor::param(const Mat& m, std::string name) {
  return make_leaf(m, {m.rows(), m.cols()}, true, std::move(name));
}

Tensor Tensor::param_vector(const Vec& v, std::string name) {
  Mat m = v.transpose();
  return make_leaf(std::move(m), {v.size()}, true, std::move(name));
}

Real Tensor::item() const {
  if (numel() != 1) {
    throw std::invalid_argument("item: tensor has " + std::to_string(numel()) + " elements");
  }
  return node_->value(0, 0);
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  return make_node(a.value() + b.value(), a.shape(), {a, b}, [](TensorNode& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad) pa.ensure_grad() += n.grad;
    if (pb.requires_grad) pb.ensure_grad() += n.grad;
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  return make_node(a.value() - b.value(), a.shape(), {a, b}, [](TensorNode& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad) pa.ensure_grad() += n.grad;
    if (pb.requires_grad) pb.ensure_grad() -= n.grad;
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  return make_node(a.value().cwiseProduct(b.value()), a.shape(), {a, b}, [](TensorNode& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad) pa.ensure_grad() += n.grad.cwiseProduct(pb.value);
    if (pb.requires_grad) pb.ensure_grad() += n.grad.cwiseProduct(pa.value);
  });
}

Tensor scale(const Tensor& x, Real c) {
  return make_node(x.value() * c, x.shape(), {x}, [c](TensorNode& n) {
    auto& p = *n.parents[0];
    if (p.requires_grad) p.ensure_grad() += n.grad * c;
  });
}

Tensor add_scalar(const Tensor& x, Real c) {
  return make_node(x.value().array() + c, x.shape(), {x}, [](TensorNode& n) {
    auto& p = *n.parents[0];
    if (p.requires_grad) p.ensure_grad() += n.grad;
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() == 0 || b.rank() != 2) {
    throw std::invalid_argument("matmul: unsupported ranks " + shape_str(a.shape()) + " * " +
                                shape_str(b.shape()));
  }
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner extents differ " + shape_str(a.shape()) + " * " +
                                shape_str(b.shape()));
  }
  Shape out_shape =
      a.rank() == 1 ? Shape{b.cols()} : Shape{a.rows(), b.cols()};
  Mat value = a.value() * b.value();
  return make_node(std::move(value), std::move(out_shape), {a, b}, [](TensorNode& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad) pa.ensure_grad().noalias() += n.grad * pb.value.transpose();
    if (pb.requires_grad) pb.ensure_grad().noalias() += pa.value.transpose() * n.grad;
  });
}

Tensor transpose(const Tensor& x) {
  if (x.rank() != 2) {
    throw std::invalid_argument("transpose: expected rank 2, got " + shape_str(x.shape()));
  }
  return make_node(x.value().transpose(), {x.cols(), x.rows()}, {x}, [](TensorNode& n) {
    auto& p = *n.parents[0];
    if (p.requires_grad) p.ensure_grad() += n.grad.transpose();
  });
}

Tensor sigmoid(const Tensor& x) {
  Mat y = x.value().unaryExpr([](Real v) { return stable_sigmoid(v); });
  return make_node(std::move(y), x.shape(), {x}, [](TensorNode& n) {
    auto& p = *n.parents[0];
    if (p.requires_grad) {
      p.ensure_grad().array() += n.grad.array() * n.value.array() * (1.0 - n.value.array());
    }
  });
}

Tensor relu(const Tensor& x) {
  Mat y = x.value().cwiseMax(0.0);
  return make_node(std::move(y), x.shape(), {x}, [](TensorNode& n) {
    auto& p = *n.parents[0];
    if (p.requires_grad) {
      p.ensure_grad().array() +=
          n.grad.array() * (p.value.array() > 0.0).template cast<Real>();
    }
  });
}

Tensor tanh(const Tensor& x) {
  Mat y = x.value().array().tanh();
  return make_node(std::move(y), x.shape(), {x}, [](TensorNode& n) {
    auto& p = *n.parents[0];
    if (p.requires_grad) {
      p.ensure_grad().array() += n.grad.array() * (1.0 - n.value.array().square());
    }
  });
}

Tensor pointwise(const Tensor& x, Activation f) {
  switch (f) {
    case Activation::Sigmoid:
      return sigmoid(x);
    case Activation::Relu:
      return relu(x);
    case Activation::Tanh:
      return tanh(x);
  }
  throw std::invalid_argument("pointwise: unknown activation");
}

Tensor softmax_rows(const Tensor& x) {
  Mat y = x.value();
  for (Index i = 0; i < y.rows(); ++i) {
    const Real m = y.row(i).maxCoeff();
    y.row(i) = (y.row(i).array() - m).exp();
    y.row(i) /= y.row(i).sum();
  }
  return make_node(std::move(y), x.shape(), {x}, [](TensorNode& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    Mat& g = p.ensure_grad();
    for (Index i = 0; i < n.value.rows(); ++i) {
      const Real dot = n.grad.row(i).dot(n.value.row(i));
      g.row(i).array() += n.value.row(i).array() * (n.grad.row(i).array() - dot);
    }
  });
}

Tensor log(const Tensor& x) {
  if ((x.value().array() <= 0.0).any()) {
    throw std::invalid_argument("log: non-positive input");
  }
  Mat y = x.value().array().log();
  return make_node(std::move(y), x.shape(), {x}, [](TensorNode& n) {
    auto& p = *n.parents[0];
    if (p.requires_grad) p.ensure_grad().array() += n.grad.array() / p.value.array();
  });
}

Tensor clamp(const Tensor& x, Real lo, Real hi) {
  if (lo > hi) throw std::invalid_argument("clamp: lo > hi");
  Mat y = x.value().cwiseMax(lo).cwiseMin(hi);
  return make_node(std::move(y), x.shape(), {x}, [lo, hi](TensorNode& n) {
    auto& p = *n.parents[0];
    if (p.requires_grad) {
      p.ensure_grad().array() +=
          n.grad.array() *
          ((p.value.array() > lo) && (p.value.array() < hi)).template cast<Real>();
    }
  });
}

Tensor concat_cols(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_cols: empty input");
  const Index rows = xs[0].rows();
  bool all_rank1 = true;
  Index total = 0;
  for (const Tensor& t : xs) {
    if (t.rank() == 0 || t.rows() != rows) {
      throw std::invalid_argument("concat_cols: row mismatch " + shape_str(xs[0].shape()) +
                                  " vs " + shape_str(t.shape()));
    }
    all_rank1 = all_rank1 && t.rank() == 1;
    total += t.cols();
  }
  Mat value(rows, total);
  Index at = 0;
  for (const Tensor& t : xs) {
    value.middleCols(at, t.cols()) = t.value();
    at += t.cols();
  }
  Shape out_shape = all_rank1 ? Shape{total} : Shape{rows, total};
  return make_node(std::move(value), std::move(out_shape), xs, [](TensorNode& n) {
    Index at = 0;
    for (auto& pp : n.parents) {
      auto& p = *pp;
      const Index w = p.value.cols();
      if (p.requires_grad) p.ensure_grad() += n.grad.middleCols(at, w);
      at += w;
    }
  });
}

Tensor concat_rows(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_rows: empty input");
  const Index cols = xs[0].cols();
  Index total = 0;
  for (const Tensor& t : xs) {
    if (t.rank() == 0 || t.cols() != cols) {
      throw std::invalid_argument("concat_rows: column mismatch " + shape_str(xs[0].shape()) +
                                  " vs " + shape_str(t.shape()));
    }
    total += t.rows();
  }
  Mat value(total, cols);
  Index at = 0;
  for (const Tensor& t : xs) {
    value.middleRows(at, t.rows()) = t.value();
    at += t.rows();
  }
  return make_node(std::move(value), {total, cols}, xs, [](TensorNode& n) {
    Index at = 0;
    for (auto& pp : n.parents) {
      auto& p = *pp;
      const Index h = p.value.rows();
      if (p.requires_grad) p.ensure_grad() += n.grad.middleRows(at, h);
      at += h;
    }
  });
}

Tensor slice_cols(const Tensor& x, Index start, Index n) {
  if (x.rank() == 0 || start < 0 || n <= 0 || start + n > x.cols()) {
    throw std::invalid_argument("slice_cols: invalid range [" + std::to_string(start) + ", " +
                                std::to_string(start + n) + ") of " + shape_str(x.shape()));
  }
  Shape out_shape = x.rank() == 1 ? Shape{n} : Shape{x.rows(), n};
  Mat value = x.value().middleCols(start, n);
  return make_node(std::move(value), std::move(out_shape), {x}, [start, n](TensorNode& nd) {
    auto& p = *nd.parents[0];
    if (p.requires_grad) p.ensure_grad().middleCols(start, n) += nd.grad;
  });
}

Tensor select_row(const Tensor& x, Index i) {
  if (x.rank() != 2 || i < 0 || i >= x.rows()) {
    throw std::invalid_argument("select_row: row " + std::to_string(i) + " of " +
                                shape_str(x.shape()));
  }
  Mat value = x.value().row(i);
  return make_node(std::move(value), {x.cols()}, {x}, [i](TensorNode& n) {
    auto& p = *n.parents[0];
    if (p.requires_grad) p.ensure_grad().row(i) += n.grad.row(0);
  });
}

Tensor add_row_broadcast(const Tensor& x, const Tensor& b) {
  if (x.rank() != 2 || b.rank() != 1 || b.cols() != x.cols()) {
    throw std::invalid_argument("add_row_broadcast: shapes " + shape_str(x.shape()) + " + " +
                                shape_str(b.shape()));
  }
  Mat value = x.value();
  value.rowwise() += b.value().row(0);
  return make_node(std::move(value), x.shape(), {x, b}, [](TensorNode& n) {
    auto& px = *n.parents[0];
    auto& pb = *n.parents[1];
    if (px.requires_grad) px.ensure_grad() += n.grad;
    if (pb.requires_grad) pb.ensure_grad() += n.grad.colwise().sum();
  });
}

Tensor colwise_mean(const Tensor& x) {
  if (x.rank() != 2) {
    throw std::invalid_argument("colwise_mean: expected rank 2, got " + shape_str(x.shape()));
  }
  Mat value = x.value().colwise().mean();
  return make_node(std::move(value), {x.cols()}, {x}, [](TensorNode& n) {
    auto& p = *n.parents[0];
    if (p.requires_grad) {
      const Real inv = 1.0 / static_cast<Real>(p.value.rows());
      p.ensure_grad().rowwise() += (n.grad.row(0) * inv);
    }
  });
}

Tensor sum(const Tensor& x) {
  Mat value(1, 1);
  value(0, 0) = x.value().sum();
  return make_node(std::move(value), {}, {x}, [](TensorNode& n) {
    auto& p = *n.parents[0];
    if (p.requires_grad) p.ensure_grad().array() += n.grad(0, 0);
  });
}

Tensor reshape(const Tensor& x, const Shape& shape) {
  check_positive_extents(shape);
  auto [r, c] = storage_dims(shape);
  if (r * c != x.numel()) {
    throw std::invalid_argument("reshape: element count mismatch " + shape_str(x.shape()) +
                                " -> " + shape_str(shape));
  }
  Mat value = Eigen::Map<const Mat>(x.value().data(), r, c);
  return make_node(std::move(value), shape, {x}, [](TensorNode& n) {
    auto& p = *n.parents[0];
    if (p.requires_grad) {
      p.ensure_grad() +=
          Eigen::Map<const Mat>(n.grad.data(), p.value.rows(), p.value.cols());
    }
  });
}

Tensor as_vector(const Tensor& x) {
  if (x.rows() != 1 && x.cols() != 1) {
    throw std::invalid_argument("as_vector: expected a single row or column, got " +
                                shape_str(x.shape()));
  }
  return reshape(x, {x.numel()});
}

Tensor cross_entropy_logits(const Tensor& logits, Index target) {
  if (logits.rank() != 1) {
    throw std::invalid_argument("cross_entropy_logits: expected rank 1, got " +
                                shape_str(logits.shape()));
  }
  if (target < 0 || target >= logits.cols()) {
    throw std::invalid_argument("cross_entropy_logits: target " + std::to_string(target) +
                                " outside vocabulary of " + std::to_string(logits.cols()));
  }
  const auto& l = logits.value();
  const Real m = l.maxCoeff();
  const Real lse = m + std::log((l.array() - m).exp().sum());
  Mat value(1, 1);
  value(0, 0) = lse - l(0, target);
  return make_node(std::move(value), {}, {logits}, [target](TensorNode& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    const auto& l = p.value;
    const Real m = l.maxCoeff();
    Eigen::Array<Real, 1, Eigen::Dynamic> sm = (l.row(0).array() - m).exp();
    sm /= sm.sum();
    sm(target) -= 1.0;
    p.ensure_grad().row(0).array() += n.grad(0, 0) * sm;
  });
}

std::vector<Tensor> backward(const Tensor& root) {
  if (!root.valid()) throw std::invalid_argument("backward: null root");
  if (root.numel() != 1) {
    throw std::invalid_argument("backward: root must be scalar, got " + shape_str(root.shape()));
  }
  if (!root.requires_grad()) {
    throw std::invalid_argument("backward: root is detached (no requires_grad input reachable)");
  }
  auto root_node = root.node();
  if (root_node->backward_done) {
    throw std::logic_error("backward: already called on this root without reset");
  }

  // Collect the reachable subgraph, then replay rules in reverse recording order.
  std::vector<std::shared_ptr<TensorNode>> nodes;
  std::unordered_set<TensorNode*> seen;
  std::vector<std::shared_ptr<TensorNode>> stack{root_node};
  seen.insert(root_node.get());
  while (!stack.empty()) {
    auto n = stack.back();
    stack.pop_back();
    nodes.push_back(n);
    for (auto& p : n->parents) {
      if (seen.insert(p.get()).second) stack.push_back(p);
    }
  }
  std::sort(nodes.begin(), nodes.end(),
            [](const auto& a, const auto& b) { return a->seq > b->seq; });

  root_node->ensure_grad()(0, 0) = 1.0;
  for (auto& n : nodes) {
    if (n->backward_rule && n->grad.size() != 0) n->backward_rule(*n);
  }
  root_node->backward_done = true;

  std::vector<Tensor> leaves;
  for (auto& n : nodes) {
    if (n->is_leaf && n->requires_grad && n->grad.size() != 0) leaves.emplace_back(n);
  }
  return leaves;
}

}  // namespace changecap
