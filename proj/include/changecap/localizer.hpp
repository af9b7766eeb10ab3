#pragma once

#include "changecap/tensor.hpp"

namespace changecap {

// Dual change localizer. Both attention maps share one 1x1-conv stack (a
// per-location MLP over [features ; difference]); the maps differ only through
// their inputs.
struct LocalizerParams {
  Tensor conv1_w;  // 2C x C_mid
  Tensor conv1_b;  // C_mid
  Tensor conv2_w;  // C_mid x 1
  Tensor conv2_b;  // 1
  Tensor w_d;      // 2C x C
  Tensor b_d;      // C
};

// a = sigmoid(conv2(relu(conv1([x ; diff])))), per location; N x 1 in (0,1).
Tensor attention_map(const Tensor& x, const Tensor& diff, const LocalizerParams& p);

// l = sum_n a[n] * x[n,:]; plain sum, no normalization.
Tensor pool_changed(const Tensor& x, const Tensor& a);

// ReLU(w_d [l_bef - l_aft ; l_aft - l_bef] + b_d).
Tensor fuse_local_diff(const Tensor& l_bef, const Tensor& l_aft, const LocalizerParams& p);

}  // namespace changecap
