#pragma once

#include "changecap/tensor.hpp"

namespace changecap {

// Representation reconstruction: per-location response signals gate the shadow
// into a reconstruction of the source; the difference is what the gate could
// not explain. One parameter set serves both directions (source always
// multiplies w_p).
struct RrmParams {
  Tensor w_p;  // C x C
  Tensor w_s;  // C x C
  Tensor b_s;  // C
  Tensor w_f;  // 2C x C
  Tensor b_f;  // C
};

struct RrmDirection {
  Tensor reconstruction;  // alpha (.) shadow
  Tensor difference;      // source - reconstruction
  Tensor alpha;           // response signals in (0,1)
};

struct RrmOut {
  Tensor diff_bef;
  Tensor diff_aft;
  Tensor diff_fused;  // ReLU([diff_bef ; diff_aft] w_f + b_f)
  Tensor alpha_bef;
  Tensor alpha_aft;
};

RrmDirection rrm_direction(const Tensor& source, const Tensor& shadow, const RrmParams& p);
RrmOut rrm_bidirectional(const Tensor& x_bef, const Tensor& x_aft, const RrmParams& p);

}  // namespace changecap
