#include "changecap/rrm.hpp"

namespace changecap {

RrmDirection rrm_direction(const Tensor& source, const Tensor& shadow, const RrmParams& p) {
  RrmDirection d;
  d.alpha = sigmoid(
      add_row_broadcast(add(matmul(source, p.w_p), matmul(shadow, p.w_s)), p.b_s));
  d.reconstruction = mul(d.alpha, shadow);
  d.difference = sub(source, d.reconstruction);
  return d;
}

RrmOut rrm_bidirectional(const Tensor& x_bef, const Tensor& x_aft, const RrmParams& p) {
  RrmDirection bef = rrm_direction(x_bef, x_aft, p);
  RrmDirection aft = rrm_direction(x_aft, x_bef, p);
  RrmOut out;
  out.diff_bef = bef.difference;
  out.diff_aft = aft.difference;
  out.alpha_bef = bef.alpha;
  out.alpha_aft = aft.alpha;
  out.diff_fused = relu(add_row_broadcast(
      matmul(concat_cols({out.diff_bef, out.diff_aft}), p.w_f), p.b_f));
  return out;
}

}  // namespace changecap
