#pragma once

#include "changecap/tensor.hpp"

namespace changecap {

// Syntactic skeleton predictor: global pooled representation -> K independent
// skeleton probabilities, trained with a multi-label log loss.
struct SspParams {
  Tensor w_g;   // 3C x D_g
  Tensor b_g1;  // D_g
  Tensor u_g;   // D_g x K
  Tensor b_g;   // K
};

inline constexpr Real kProbClamp = 1e-7;

// Mean over locations of [x_bef ; x_aft ; diff_fused]; rank-1 of length 3C.
Tensor global_repr(const Tensor& x_bef, const Tensor& x_aft, const Tensor& diff_fused);

// sigmoid(u_g . relu(w_g . s) + b_g); rank-1 of length K, entries in (0,1).
Tensor predict_skeletons(const Tensor& s, const SspParams& p);

// Per-sample multi-label BCE, summed over the K skeletons; probabilities are
// clamped to [kProbClamp, 1-kProbClamp] before the logs. Labels must be 0/1.
Tensor multilabel_bce(const Tensor& probs, const Tensor& labels);

// Batch form: mean over samples of the per-sample sum.
Tensor multilabel_loss(const std::vector<Tensor>& probs, const std::vector<Tensor>& labels);

}  // namespace changecap
