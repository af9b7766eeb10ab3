#include "changecap/relation.hpp"

#include <cmath>
#include <stdexcept>

namespace changecap {

Tensor project_features(const Tensor& x, const Tensor& w_in) { return matmul(x, w_in); }

RelationOut embed_relations(const Tensor& x, const RelationParams& p) {
  const Index c = x.cols();
  if (p.heads <= 0 || c % p.heads != 0) {
    throw std::invalid_argument("embed_relations: channels " + std::to_string(c) +
                                " not divisible by " + std::to_string(p.heads) + " heads");
  }
  const Index dk = c / p.heads;
  const Real inv_sqrt_dk = 1.0 / std::sqrt(static_cast<Real>(dk));

  Tensor q = matmul(x, p.w_q);
  Tensor k = matmul(x, p.w_k);
  Tensor v = matmul(x, p.w_v);

  RelationOut out;
  std::vector<Tensor> heads;
  heads.reserve(static_cast<std::size_t>(p.heads));
  for (Index h = 0; h < p.heads; ++h) {
    Tensor qh = slice_cols(q, h * dk, dk);
    Tensor kh = slice_cols(k, h * dk, dk);
    Tensor vh = slice_cols(v, h * dk, dk);
    Tensor attn = softmax_rows(scale(matmul(qh, transpose(kh)), inv_sqrt_dk));
    out.attention.push_back(attn);
    heads.push_back(matmul(attn, vh));
  }
  out.out = matmul(concat_cols(heads), p.w_o);
  return out;
}

}  // namespace changecap
