#include "changecap/ssp.hpp"

#include <stdexcept>

namespace changecap {

Tensor global_repr(const Tensor& x_bef, const Tensor& x_aft, const Tensor& diff_fused) {
  return colwise_mean(concat_cols({x_bef, x_aft, diff_fused}));
}

Tensor predict_skeletons(const Tensor& s, const SspParams& p) {
  Tensor hidden = relu(add(matmul(s, p.w_g), p.b_g1));
  return sigmoid(add(matmul(hidden, p.u_g), p.b_g));
}

Tensor multilabel_bce(const Tensor& probs, const Tensor& labels) {
  if (probs.shape() != labels.shape()) {
    throw std::invalid_argument("multilabel_bce: probability/label shape mismatch");
  }
  for (Index i = 0; i < labels.cols(); ++i) {
    const Real y = labels.value()(0, i);
    if (y != 0.0 && y != 1.0) {
      throw std::invalid_argument("multilabel_bce: label not in {0,1}");
    }
  }
  Tensor p = clamp(probs, kProbClamp, 1.0 - kProbClamp);
  Tensor one_minus_p = add_scalar(scale(p, -1.0), 1.0);
  Tensor one_minus_y = add_scalar(scale(labels, -1.0), 1.0);
  Tensor per_skeleton = add(mul(labels, log(p)), mul(one_minus_y, log(one_minus_p)));
  return scale(sum(per_skeleton), -1.0);
}

Tensor multilabel_loss(const std::vector<Tensor>& probs, const std::vector<Tensor>& labels) {
  if (probs.empty() || probs.size() != labels.size()) {
    throw std::invalid_argument("multilabel_loss: empty or mismatched batch");
  }
  Tensor total = multilabel_bce(probs[0], labels[0]);
  for (std::size_t i = 1; i < probs.size(); ++i) {
    total = add(total, multilabel_bce(probs[i], labels[i]));
  }
  return scale(total, 1.0 / static_cast<Real>(probs.size()));
}

}  // namespace changecap
