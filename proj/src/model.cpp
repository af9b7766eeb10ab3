#include "changecap/model.hpp"

#include "changecap/rng.hpp"
#include "changecap/serialize.hpp"

#include <json.hpp>

#include <cmath>
#include <map>
#include <stdexcept>

namespace changecap {

namespace {

using nlohmann::json;

const std::array<std::string, 4> kVariantNames = {"baseline", "rrm", "r3net", "r3net-ssp"};

Mat glorot(Index rows, Index cols, SplitMix64& rng, Real gain) {
  const Real a = gain * std::sqrt(6.0 / static_cast<Real>(rows + cols));
  Mat m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-a, a);
  }
  return m;
}

Tensor glorot_param(Index rows, Index cols, SplitMix64& rng, const std::string& name,
                    Real gain = 1.0) {
  return Tensor::param(glorot(rows, cols, rng, gain), name);
}

Tensor zero_vec_param(Index n, const std::string& name) {
  return Tensor::param_vector(Vec::Zero(n), name);
}

LstmParams init_lstm(Index input, Index hidden, SplitMix64& rng, const std::string& prefix) {
  LstmParams p;
  p.hidden = hidden;
  p.w = glorot_param(input, 4 * hidden, rng, prefix + ".w");
  p.u = glorot_param(hidden, 4 * hidden, rng, prefix + ".u");
  Vec b = Vec::Zero(4 * hidden);
  b.segment(hidden, hidden).setOnes();  // forget gate bias
  p.b = Tensor::param_vector(b, prefix + ".b");
  return p;
}

json dims_to_json(const Dims& d) {
  return json{{"grid_h", d.grid_h}, {"grid_w", d.grid_w}, {"c_in", d.c_in},
              {"c", d.c},           {"heads", d.heads},   {"c_mid", d.c_mid},
              {"d_g", d.d_g},       {"k", d.k},           {"m", d.m},
              {"m_w", d.m_w},       {"h_a", d.h_a},       {"h_c", d.h_c},
              {"vocab", d.vocab},   {"max_len", d.max_len}};
}

Dims dims_from_json(const json& j) {
  Dims d;
  d.grid_h = j.at("grid_h").get<Index>();
  d.grid_w = j.at("grid_w").get<Index>();
  d.c_in = j.at("c_in").get<Index>();
  d.c = j.at("c").get<Index>();
  d.heads = j.at("heads").get<Index>();
  d.c_mid = j.at("c_mid").get<Index>();
  d.d_g = j.at("d_g").get<Index>();
  d.k = j.at("k").get<Index>();
  d.m = j.at("m").get<Index>();
  d.m_w = j.at("m_w").get<Index>();
  d.h_a = j.at("h_a").get<Index>();
  d.h_c = j.at("h_c").get<Index>();
  d.vocab = j.at("vocab").get<Index>();
  d.max_len = j.at("max_len").get<Index>();
  return d;
}

}  // namespace

const std::string& variant_name(Variant v) { return kVariantNames[static_cast<std::size_t>(v)]; }

std::optional<Variant> variant_from_name(const std::string& s) {
  for (std::size_t i = 0; i < kVariantNames.size(); ++i) {
    if (kVariantNames[i] == s) return static_cast<Variant>(i);
  }
  return std::nullopt;
}

ModelState ModelState::init(const Dims& dims, Variant variant, std::uint64_t seed) {
  if (dims.c % dims.heads != 0) {
    throw std::invalid_argument("model init: c must be divisible by the head count");
  }
  ModelState m;
  m.dims = dims;
  m.variant = variant;

  // Per-module streams; every tensor is drawn for every variant so that a
  // shared module initializes identically across the ablation ladder.
  SplitMix64 proj_rng(SplitMix64::split(seed, 0));
  SplitMix64 rel_rng(SplitMix64::split(seed, 1));
  SplitMix64 rrm_rng(SplitMix64::split(seed, 2));
  SplitMix64 loc_rng(SplitMix64::split(seed, 3));
  SplitMix64 ssp_rng(SplitMix64::split(seed, 4));
  SplitMix64 dec_rng(SplitMix64::split(seed, 5));

  m.w_in = glorot_param(dims.c_in, dims.c, proj_rng, "proj.w_in");

  m.relation.heads = dims.heads;
  // Without a residual path the relation output replaces the features, so each
  // location must keep its own identity at the start: matching query/key
  // weights make the initial score matrix a Gram matrix, biasing attention
  // toward self and content-similar cells.
  m.relation.w_q = glorot_param(dims.c, dims.c, rel_rng, "rel.w_q", 3.0);
  m.relation.w_k = Tensor::param(m.relation.w_q.value(), "rel.w_k");
  // Identity value/output paths make the module start as a near-identity map
  // (self-dominant attention passes each location through), so the variant
  // begins where the reconstruction-only ladder rung begins and the relation
  // capacity fades in as the attention learns.
  m.relation.w_v = Tensor::param(Mat::Identity(dims.c, dims.c), "rel.w_v");
  m.relation.w_o = Tensor::param(Mat::Identity(dims.c, dims.c), "rel.w_o");

  // Response signals start as a similarity gate: alpha = sigmoid(W_p (source -
  // shadow) + 2), so reconstruction succeeds where the two images agree and the
  // difference representation is born sparse at the changed cells.
  m.rrm.w_p = glorot_param(dims.c, dims.c, rrm_rng, "rrm.w_p");
  m.rrm.w_s = Tensor::param((-m.rrm.w_p.value()).eval(), "rrm.w_s");
  m.rrm.b_s = Tensor::param_vector(Vec::Constant(dims.c, 2.0), "rrm.b_s");
  m.rrm.w_f = glorot_param(2 * dims.c, dims.c, rrm_rng, "rrm.w_f", 3.0);
  m.rrm.b_f = zero_vec_param(dims.c, "rrm.b_f");

  // The map head starts as a difference detector: conv1 weighs the difference
  // channels up, conv2 is positive so the response is monotone in per-cell
  // activity, and the bias keeps cells dark until the difference lights them.
  {
    Mat c1 = glorot(2 * dims.c, dims.c_mid, loc_rng, 1.0);
    c1.bottomRows(dims.c) *= 2.0;
    m.localizer.conv1_w = Tensor::param(c1, "loc.conv1_w");
  }
  m.localizer.conv1_b = zero_vec_param(dims.c_mid, "loc.conv1_b");
  m.localizer.conv2_w =
      Tensor::param(glorot(dims.c_mid, 1, loc_rng, 1.0).cwiseAbs().eval(), "loc.conv2_w");
  m.localizer.conv2_b = Tensor::param_vector(Vec::Constant(1, -2.0), "loc.conv2_b");
  m.localizer.w_d = glorot_param(2 * dims.c, dims.c, loc_rng, "loc.w_d");
  m.localizer.b_d = zero_vec_param(dims.c, "loc.b_d");

  // s is a global mean with small entries; the larger gain keeps the hidden
  // layer at O(1) activations, and the difference block carries the change, so
  // its rows start another factor up.
  {
    Mat wg = glorot(3 * dims.c, dims.d_g, ssp_rng, 6.0);
    wg.bottomRows(dims.c) *= 4.0;
    m.ssp.w_g = Tensor::param(wg, "ssp.w_g");
  }
  // All hidden units start alive, and the output layer starts with enough
  // range to commit to confident probabilities.
  m.ssp.b_g1 = Tensor::param_vector(Vec::Constant(dims.d_g, 0.2), "ssp.b_g1");
  m.ssp.u_g = glorot_param(dims.d_g, dims.k, ssp_rng, "ssp.u_g", 2.0);
  m.ssp.b_g = zero_vec_param(dims.k, "ssp.b_g");

  m.decoder.e_q = glorot_param(dims.k, dims.m, dec_rng, "dec.e_q");
  m.decoder.w_q = glorot_param(dims.m, dims.m, dec_rng, "dec.w_q");
  m.decoder.b_q = zero_vec_param(dims.m, "dec.b_q");
  m.decoder.w_a1 = glorot_param(3 * dims.c, dims.c, dec_rng, "dec.w_a1");
  m.decoder.b_a1 = zero_vec_param(dims.c, "dec.b_a1");
  m.decoder.lstm_a = init_lstm(dims.c + dims.m + dims.h_c, dims.h_a, dec_rng, "dec.lstm_a");
  m.decoder.w_a2 = glorot_param(dims.h_a, 3, dec_rng, "dec.w_a2");
  m.decoder.b_a2 = zero_vec_param(3, "dec.b_a2");
  m.decoder.e_w = glorot_param(dims.vocab, dims.m_w, dec_rng, "dec.e_w", 3.0);
  m.decoder.lstm_c = init_lstm(dims.m_w + dims.m + dims.c, dims.h_c, dec_rng, "dec.lstm_c");
  m.decoder.w_c = glorot_param(dims.h_c, dims.vocab, dec_rng, "dec.w_c");
  m.decoder.b_c = zero_vec_param(dims.vocab, "dec.b_c");
  return m;
}

std::vector<Tensor> ModelState::parameters() const {
  std::vector<Tensor> out{w_in};
  if (has_relation()) {
    out.insert(out.end(), {relation.w_q, relation.w_k, relation.w_v, relation.w_o});
  }
  if (has_rrm()) {
    out.insert(out.end(), {rrm.w_p, rrm.w_s, rrm.b_s, rrm.w_f, rrm.b_f});
  }
  out.insert(out.end(), {localizer.conv1_w, localizer.conv1_b, localizer.conv2_w,
                         localizer.conv2_b, localizer.w_d, localizer.b_d});
  if (has_ssp()) {
    out.insert(out.end(), {ssp.w_g, ssp.b_g1, ssp.u_g, ssp.b_g});
    out.insert(out.end(), {decoder.e_q, decoder.w_q, decoder.b_q});
  }
  out.insert(out.end(), {decoder.w_a1, decoder.b_a1, decoder.lstm_a.w, decoder.lstm_a.u,
                         decoder.lstm_a.b, decoder.w_a2, decoder.b_a2, decoder.e_w,
                         decoder.lstm_c.w, decoder.lstm_c.u, decoder.lstm_c.b, decoder.w_c,
                         decoder.b_c});
  return out;
}

void ModelState::zero_grads() {
  for (Tensor t : parameters()) t.zero_grad();
}

Index ModelState::parameter_count() const {
  Index n = 0;
  for (const Tensor& t : parameters()) n += t.numel();
  return n;
}

Forward model_forward(const ModelState& model, const Mat& grid_bef, const Mat& grid_aft) {
  const Dims& d = model.dims;
  const auto check = [&d](const Mat& g, const char* which) {
    if (g.rows() != d.locations() || g.cols() != d.c_in) {
      throw std::invalid_argument(std::string("model_forward: ") + which + " grid is " +
                                  std::to_string(g.rows()) + "x" + std::to_string(g.cols()) +
                                  ", model expects " + std::to_string(d.locations()) + "x" +
                                  std::to_string(d.c_in));
    }
  };
  check(grid_bef, "before");
  check(grid_aft, "after");

  Forward f;
  Tensor xb = project_features(Tensor::matrix(grid_bef), model.w_in);
  Tensor xa = project_features(Tensor::matrix(grid_aft), model.w_in);
  if (model.has_relation()) {
    RelationOut rb = embed_relations(xb, model.relation);
    RelationOut ra = embed_relations(xa, model.relation);
    xb = rb.out;
    xa = ra.out;
    f.rel_attn_bef = std::move(rb.attention);
    f.rel_attn_aft = std::move(ra.attention);
  }
  f.x_bef = xb;
  f.x_aft = xa;

  if (model.has_rrm()) {
    f.rrm = rrm_bidirectional(xb, xa, model.rrm);
    f.diff = f.rrm->diff_fused;
  } else {
    f.diff = sub(xb, xa);  // direct subtraction baseline
  }

  f.a_bef = attention_map(xb, f.diff, model.localizer);
  f.a_aft = attention_map(xa, f.diff, model.localizer);
  f.local.l_bef = pool_changed(xb, f.a_bef);
  f.local.l_aft = pool_changed(xa, f.a_aft);
  f.local.l_diff = fuse_local_diff(f.local.l_bef, f.local.l_aft, model.localizer);

  if (model.has_ssp()) {
    Tensor s = global_repr(xb, xa, f.diff);
    f.skel_probs = predict_skeletons(s, model.ssp);
    f.skel_feature = embed_skeletons(f.skel_probs, model.decoder);
  } else {
    f.skel_feature = Tensor::zeros({d.m});
  }
  return f;
}

void save_checkpoint(const std::string& path, const ModelState& model,
                     const std::string& config_json,
                     const std::vector<std::pair<std::string, Mat>>& extra) {
  Container c;
  c.version = 1;
  json meta{{"format_version", 1},
            {"variant", variant_name(model.variant)},
            {"dims", dims_to_json(model.dims)}};
  if (!config_json.empty()) meta["config"] = json::parse(config_json);
  c.config_json = meta.dump();

  for (const Tensor& t : model.parameters()) {
    c.tensors.push_back({t.name(), t.shape(), t.value()});
  }
  for (const auto& [name, mat] : extra) {
    c.tensors.push_back({name, Shape{mat.rows(), mat.cols()}, mat});
  }
  write_container(path, c);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  Container c = read_container(path);
  json meta = json::parse(c.config_json);
  const auto variant = variant_from_name(meta.at("variant").get<std::string>());
  if (!variant) throw std::runtime_error("checkpoint: unknown variant in " + path);
  const Dims dims = dims_from_json(meta.at("dims"));

  LoadedCheckpoint out;
  out.model = ModelState::init(dims, *variant, 0);
  out.config_json = meta.contains("config") ? meta.at("config").dump() : std::string();

  std::map<std::string, NamedTensor*> by_name;
  for (NamedTensor& t : c.tensors) by_name[t.name] = &t;

  for (Tensor t : out.model.parameters()) {
    auto it = by_name.find(t.name());
    if (it == by_name.end()) {
      throw std::runtime_error("checkpoint: missing tensor '" + t.name() + "' in " + path);
    }
    if (it->second->shape != t.shape()) {
      throw std::runtime_error("checkpoint: shape mismatch for '" + t.name() + "'");
    }
    t.mutable_value() = it->second->data;
    by_name.erase(it);
  }
  for (auto& [name, tensor] : by_name) {
    out.extra.emplace_back(name, std::move(tensor->data));
  }
  return out;
}

}  // namespace changecap
