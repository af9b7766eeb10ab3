#include "changecap/decoder.hpp"

#include <stdexcept>

namespace changecap {

LstmState lstm_step(const LstmParams& p, const Tensor& x, const LstmState& s) {
  const Index h = p.hidden;
  Tensor z = add(add(matmul(x, p.w), matmul(s.h, p.u)), p.b);
  Tensor gi = sigmoid(slice_cols(z, 0, h));
  Tensor gf = sigmoid(slice_cols(z, h, h));
  Tensor gc = tanh(slice_cols(z, 2 * h, h));
  Tensor go = sigmoid(slice_cols(z, 3 * h, h));
  LstmState next;
  next.c = add(mul(gf, s.c), mul(gi, gc));
  next.h = mul(go, tanh(next.c));
  return next;
}

DecodeState init_decode_state(const DecoderParams& p) {
  DecodeState s;
  s.attn.h = Tensor::zeros({p.lstm_a.hidden});
  s.attn.c = Tensor::zeros({p.lstm_a.hidden});
  s.cap.h = Tensor::zeros({p.lstm_c.hidden});
  s.cap.c = Tensor::zeros({p.lstm_c.hidden});
  return s;
}

Tensor embed_skeletons(const Tensor& probs, const DecoderParams& p) {
  Tensor weighted = matmul(probs, p.e_q);  // [K] . [K x M] -> [M]
  return relu(add(matmul(weighted, p.w_q), p.b_q));
}

AttendOut attend_step(const LocalFeatures& f, const Tensor& skel, DecodeState& state,
                      const DecoderParams& p) {
  Tensor v = relu(add(matmul(concat_cols({f.l_bef, f.l_diff, f.l_aft}), p.w_a1), p.b_a1));
  Tensor u = concat_cols({v, skel, state.cap.h});
  state.attn = lstm_step(p.lstm_a, u, state.attn);
  AttendOut out;
  out.beta = softmax_rows(add(matmul(state.attn.h, p.w_a2), p.b_a2));
  // Convex mix of the three local features, rows ordered as the beta logits.
  Tensor stacked = concat_rows({f.l_bef, f.l_aft, f.l_diff});
  out.l_dyn = matmul(out.beta, stacked);
  return out;
}

Tensor decode_step(Index prev_token, const Tensor& skel, const Tensor& l_dyn, DecodeState& state,
                   const DecoderParams& p) {
  if (prev_token < 0 || prev_token >= p.e_w.rows()) {
    throw std::invalid_argument("decode_step: token id " + std::to_string(prev_token) +
                                " outside vocabulary of " + std::to_string(p.e_w.rows()));
  }
  Tensor word = select_row(p.e_w, prev_token);
  Tensor c_in = concat_cols({word, skel, l_dyn});
  state.cap = lstm_step(p.lstm_c, c_in, state.cap);
  state.t += 1;
  return add(matmul(state.cap.h, p.w_c), p.b_c);
}

std::vector<Index> greedy_decode(const LocalFeatures& f, const Tensor& skel,
                                 const DecoderParams& p, Index bos, Index eos, Index max_len) {
  if (max_len < 1) throw std::invalid_argument("greedy_decode: max_len must be >= 1");
  NoGradGuard ng;
  DecodeState state = init_decode_state(p);
  std::vector<Index> out;
  Index prev = bos;
  for (Index t = 0; t < max_len; ++t) {
    AttendOut att = attend_step(f, skel, state, p);
    Tensor logits = decode_step(prev, skel, att.l_dyn, state, p);
    // First maximum wins, so ties resolve to the lowest token id.
    Index best = 0;
    const auto& row = logits.value();
    for (Index j = 1; j < row.cols(); ++j) {
      if (row(0, j) > row(0, best)) best = j;
    }
    if (best == eos) break;
    out.push_back(best);
    prev = best;
  }
  return out;
}

Tensor caption_nll(const std::vector<Index>& targets, const LocalFeatures& f, const Tensor& skel,
                   const DecoderParams& p, Index bos) {
  if (targets.empty()) throw std::invalid_argument("caption_nll: empty target sequence");
  DecodeState state = init_decode_state(p);
  Tensor total;
  Index prev = bos;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    AttendOut att = attend_step(f, skel, state, p);
    Tensor logits = decode_step(prev, skel, att.l_dyn, state, p);
    Tensor step_nll = cross_entropy_logits(logits, targets[t]);
    total = t == 0 ? step_nll : add(total, step_nll);
    prev = targets[t];
  }
  return total;
}

}  // namespace changecap
