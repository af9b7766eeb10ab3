#include "changecap/localizer.hpp"

#include <stdexcept>

namespace changecap {

Tensor attention_map(const Tensor& x, const Tensor& diff, const LocalizerParams& p) {
  if (x.rows() != diff.rows()) {
    throw std::invalid_argument("attention_map: location counts differ: " +
                                std::to_string(x.rows()) + " vs " + std::to_string(diff.rows()));
  }
  Tensor hidden = relu(
      add_row_broadcast(matmul(concat_cols({x, diff}), p.conv1_w), p.conv1_b));
  return sigmoid(add_row_broadcast(matmul(hidden, p.conv2_w), p.conv2_b));
}

Tensor pool_changed(const Tensor& x, const Tensor& a) {
  if (x.rows() != a.rows() || a.cols() != 1) {
    throw std::invalid_argument("pool_changed: expected [N x C] with [N x 1] weights");
  }
  return as_vector(matmul(transpose(a), x));
}

Tensor fuse_local_diff(const Tensor& l_bef, const Tensor& l_aft, const LocalizerParams& p) {
  Tensor fwd = sub(l_bef, l_aft);
  Tensor bwd = sub(l_aft, l_bef);
  return relu(add(matmul(concat_cols({fwd, bwd}), p.w_d), p.b_d));
}

}  // namespace changecap
