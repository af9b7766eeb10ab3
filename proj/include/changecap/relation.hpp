#pragma once

#include "changecap/tensor.hpp"

#include <vector>

namespace changecap {

// Multi-head scaled dot-product self-attention over a projected feature grid.
// Parameters are shared between the before/after branches so identical inputs
// embed identically.
struct RelationParams {
  Tensor w_q;  // C x C
  Tensor w_k;  // C x C
  Tensor w_v;  // C x C
  Tensor w_o;  // C x C
  Index heads = 4;
};

struct RelationOut {
  Tensor out;                      // N x C, replaces the input features
  std::vector<Tensor> attention;   // per head, N x N row-stochastic
};

// x * w_in; shared projection of raw grid features into the working width.
Tensor project_features(const Tensor& x, const Tensor& w_in);

RelationOut embed_relations(const Tensor& x, const RelationParams& p);

}  // namespace changecap
