#pragma once

#include "changecap/tensor.hpp"

#include <vector>

namespace changecap {

// Fused-gate LSTM cell: z = x w + h u + b with gate order (input, forget,
// candidate, output). Forget-gate bias is initialized to 1.
struct LstmParams {
  Tensor w;  // in x 4H
  Tensor u;  // H x 4H
  Tensor b;  // 4H
  Index hidden = 0;
};

struct LstmState {
  Tensor h;
  Tensor c;
};

LstmState lstm_step(const LstmParams& p, const Tensor& x, const LstmState& s);

// Skeleton embedding, semantic attention LSTM and caption LSTM (shapes in
// comments use C = feature width, M = skeleton feature, M_w = word embedding,
// H_a/H_c = hidden sizes, V = vocabulary, K = skeleton count).
struct DecoderParams {
  Tensor e_q;   // K x M skeleton embedding table
  Tensor w_q;   // M x M
  Tensor b_q;   // M
  Tensor w_a1;  // 3C x C
  Tensor b_a1;  // C
  LstmParams lstm_a;  // input C + M + H_c
  Tensor w_a2;  // H_a x 3
  Tensor b_a2;  // 3
  Tensor e_w;   // V x M_w word embedding table
  LstmParams lstm_c;  // input M_w + M + C
  Tensor w_c;   // H_c x V
  Tensor b_c;   // V
};

struct LocalFeatures {
  Tensor l_bef;
  Tensor l_aft;
  Tensor l_diff;
};

struct DecodeState {
  LstmState attn;
  LstmState cap;
  Index t = 0;
  std::vector<Index> emitted;
};

DecodeState init_decode_state(const DecoderParams& p);

// ReLU(w_q (e_q^T p) + b_q): probability-weighted sum of skeleton embeddings
// through an affine map.
Tensor embed_skeletons(const Tensor& probs, const DecoderParams& p);

struct AttendOut {
  Tensor beta;   // rank-1 [3] on the simplex, order (bef, aft, diff)
  Tensor l_dyn;  // rank-1 [C]
};

AttendOut attend_step(const LocalFeatures& f, const Tensor& skel, DecodeState& state,
                      const DecoderParams& p);

// Returns word logits; advances the caption LSTM.
Tensor decode_step(Index prev_token, const Tensor& skel, const Tensor& l_dyn, DecodeState& state,
                   const DecoderParams& p);

// Greedy argmax decoding from BOS until EOS or max_len; ties break toward the
// lowest token id. EOS is not included in the returned sequence.
std::vector<Index> greedy_decode(const LocalFeatures& f, const Tensor& skel,
                                 const DecoderParams& p, Index bos, Index eos, Index max_len);

// Teacher-forced negative log-likelihood of `targets` (the sequence the
// decoder must emit, conventionally ending with EOS); per-sequence sum.
Tensor caption_nll(const std::vector<Index>& targets, const LocalFeatures& f, const Tensor& skel,
                   const DecoderParams& p, Index bos);

}  // namespace changecap
