#include "changecap/grad_check.hpp"
#include "changecap/localizer.hpp"
#include "changecap/relation.hpp"
#include "changecap/rng.hpp"
#include "changecap/rrm.hpp"
#include "changecap/ssp.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>

using namespace changecap;

namespace {

Mat random_mat(Index r, Index c, SplitMix64& rng, Real lo = -1.0, Real hi = 1.0) {
  Mat m(r, c);
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < c; ++j) m(i, j) = rng.uniform(lo, hi);
  }
  return m;
}

RelationParams random_relation(Index c, Index heads, SplitMix64& rng) {
  RelationParams p;
  p.heads = heads;
  p.w_q = Tensor::param(random_mat(c, c, rng), "w_q");
  p.w_k = Tensor::param(random_mat(c, c, rng), "w_k");
  p.w_v = Tensor::param(random_mat(c, c, rng), "w_v");
  p.w_o = Tensor::param(random_mat(c, c, rng), "w_o");
  return p;
}

RrmParams random_rrm(Index c, SplitMix64& rng) {
  RrmParams p;
  p.w_p = Tensor::param(random_mat(c, c, rng), "w_p");
  p.w_s = Tensor::param(random_mat(c, c, rng), "w_s");
  p.b_s = Tensor::param_vector(Vec::LinSpaced(c, -0.2, 0.3), "b_s");
  p.w_f = Tensor::param(random_mat(2 * c, c, rng), "w_f");
  p.b_f = Tensor::param_vector(Vec::LinSpaced(c, -0.1, 0.2), "b_f");
  return p;
}

LocalizerParams random_localizer(Index c, SplitMix64& rng) {
  LocalizerParams p;
  p.conv1_w = Tensor::param(random_mat(2 * c, c, rng), "conv1_w");
  p.conv1_b = Tensor::param_vector(Vec::LinSpaced(c, -0.2, 0.2), "conv1_b");
  p.conv2_w = Tensor::param(random_mat(c, 1, rng), "conv2_w");
  p.conv2_b = Tensor::param_vector(Vec::Constant(1, 0.1), "conv2_b");
  p.w_d = Tensor::param(random_mat(2 * c, c, rng), "w_d");
  p.b_d = Tensor::param_vector(Vec::LinSpaced(c, -0.3, 0.1), "b_d");
  return p;
}

}  // namespace

// ---------------------------------------------------------------- relation

TEST_CASE("project_features: identity-padded projection copies leading columns") {
  Mat w = Mat::Zero(6, 4);
  w.topLeftCorner(4, 4).setIdentity();
  SplitMix64 rng(1);
  Mat x = random_mat(3, 6, rng);
  Tensor out = project_features(Tensor::matrix(x), Tensor::matrix(w));
  CHECK((out.value() - x.leftCols(4)).cwiseAbs().maxCoeff() <= 1e-15);

  Tensor zero = project_features(Tensor::matrix(Mat::Zero(3, 6)), Tensor::matrix(w));
  CHECK(zero.value().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("embed_relations with a single location is the value path") {
  SplitMix64 rng(2);
  RelationParams p = random_relation(4, 1, rng);
  Mat x = random_mat(1, 4, rng);
  RelationOut out = embed_relations(Tensor::matrix(x), p);
  CHECK(out.attention[0].value()(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  const Mat expected = x * p.w_v.value() * p.w_o.value();
  CHECK((out.out.value() - expected).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("embed_relations: identical rows produce identical outputs") {
  SplitMix64 rng(3);
  RelationParams p = random_relation(8, 2, rng);
  Mat row = random_mat(1, 8, rng);
  Mat x = row.replicate(5, 1);
  RelationOut out = embed_relations(Tensor::matrix(x), p);
  for (Index i = 1; i < 5; ++i) {
    CHECK((out.out.value().row(i) - out.out.value().row(0)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("embed_relations matches a hand-worked single-head oracle") {
  // N=2, C=4, one head: every step evaluated with direct Eigen arithmetic.
  Mat x(2, 4);
  x << 0.1, -0.4, 0.3, 0.7, -0.2, 0.5, 0.05, -0.6;
  Mat wq(4, 4), wk(4, 4), wv(4, 4), wo(4, 4);
  wq << 0.2, 0, 0.1, -0.3, 0.4, 0.1, 0, 0.2, -0.1, 0.3, 0.2, 0, 0, -0.2, 0.5, 0.1;
  wk << 0.1, 0.2, -0.1, 0, 0.3, -0.3, 0.2, 0.1, 0, 0.1, 0.4, -0.2, 0.2, 0, 0.1, 0.3;
  wv << -0.2, 0.1, 0.3, 0.2, 0.1, 0.4, -0.1, 0, 0.3, 0.2, 0.1, -0.4, 0, 0.1, 0.2, 0.5;
  wo << 0.5, 0.1, 0, -0.1, 0.2, 0.3, 0.1, 0, -0.3, 0, 0.4, 0.2, 0.1, 0.2, -0.2, 0.3;

  RelationParams p;
  p.heads = 1;
  p.w_q = Tensor::param(wq, "wq");
  p.w_k = Tensor::param(wk, "wk");
  p.w_v = Tensor::param(wv, "wv");
  p.w_o = Tensor::param(wo, "wo");

  const Mat q = x * wq;
  const Mat k = x * wk;
  const Mat v = x * wv;
  Mat scores = q * k.transpose() / 2.0;  // sqrt(d_k) = sqrt(4)
  Mat attn(2, 2);
  for (Index i = 0; i < 2; ++i) {
    const Real m = scores.row(i).maxCoeff();
    const Real e0 = std::exp(scores(i, 0) - m);
    const Real e1 = std::exp(scores(i, 1) - m);
    attn(i, 0) = e0 / (e0 + e1);
    attn(i, 1) = e1 / (e0 + e1);
  }
  const Mat expected = (attn * v) * wo;

  RelationOut out = embed_relations(Tensor::matrix(x), p);
  CHECK((out.out.value() - expected).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((out.attention[0].value() - attn).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("embed_relations is permutation equivariant and row-stochastic") {
  SplitMix64 rng(4);
  RelationParams p = random_relation(8, 4, rng);
  Mat x = random_mat(6, 8, rng);
  RelationOut base = embed_relations(Tensor::matrix(x), p);

  for (const Tensor& attn : base.attention) {
    for (Index i = 0; i < attn.rows(); ++i) {
      CHECK(std::abs(attn.value().row(i).sum() - 1.0) <= 1e-9);
    }
  }

  const std::vector<Index> perm{3, 0, 5, 1, 4, 2};
  Mat xp(6, 8);
  for (Index i = 0; i < 6; ++i) xp.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
  RelationOut permuted = embed_relations(Tensor::matrix(xp), p);
  for (Index i = 0; i < 6; ++i) {
    CHECK((permuted.out.value().row(i) - base.out.value().row(perm[static_cast<std::size_t>(i)]))
              .cwiseAbs()
              .maxCoeff() <= 1e-12);
  }
}

TEST_CASE("embed_relations: shared weights give bitwise-equal outputs on equal inputs") {
  SplitMix64 rng(5);
  RelationParams p = random_relation(8, 4, rng);
  Mat x = random_mat(5, 8, rng);
  Mat a = embed_relations(Tensor::matrix(x), p).out.value();
  Mat b = embed_relations(Tensor::matrix(x), p).out.value();
  CHECK(std::memcmp(a.data(), b.data(), sizeof(Real) * static_cast<std::size_t>(a.size())) == 0);
}

TEST_CASE("relation gradient check") {
  SplitMix64 rng(6);
  RelationParams p = random_relation(8, 2, rng);
  Tensor w_in = Tensor::param(random_mat(10, 8, rng), "w_in");
  Mat x = random_mat(4, 10, rng);
  Mat r = random_mat(4, 8, rng);
  const auto build = [&]() {
    Tensor projected = project_features(Tensor::matrix(x), w_in);
    return sum(mul(embed_relations(projected, p).out, Tensor::matrix(r)));
  };
  GradCheckOptions opts;
  opts.tolerance = 1e-5;
  const auto report = grad_check(build, {w_in, p.w_q, p.w_k, p.w_v, p.w_o}, opts);
  INFO(report.summary());
  CHECK(report.pass);
}

// ---------------------------------------------------------------- rrm

TEST_CASE("rrm_direction: zero parameters give alpha 0.5 and half-shadow reconstruction") {
  const Index c = 4;
  RrmParams p;
  p.w_p = Tensor::param(Mat::Zero(c, c), "w_p");
  p.w_s = Tensor::param(Mat::Zero(c, c), "w_s");
  p.b_s = Tensor::param_vector(Vec::Zero(c), "b_s");
  p.w_f = Tensor::param(Mat::Zero(2 * c, c), "w_f");
  p.b_f = Tensor::param_vector(Vec::Zero(c), "b_f");

  SplitMix64 rng(7);
  Mat src = random_mat(3, c, rng);
  Mat shd = random_mat(3, c, rng);
  RrmDirection d = rrm_direction(Tensor::matrix(src), Tensor::matrix(shd), p);
  CHECK((d.alpha.value().array() - 0.5).abs().maxCoeff() == 0.0);
  CHECK((d.reconstruction.value() - shd / 2.0).cwiseAbs().maxCoeff() <= 1e-15);

  // Saturated gate with identical inputs: difference collapses.
  RrmParams sat = p;
  sat.b_s = Tensor::param_vector(Vec::Constant(c, 20.0), "b_s");
  RrmDirection ds = rrm_direction(Tensor::matrix(src), Tensor::matrix(src), sat);
  CHECK(ds.difference.value().cwiseAbs().maxCoeff() <= 1e-6 * src.cwiseAbs().maxCoeff());

  // W_f = 0, b_f = 0 fuses to exactly zero.
  RrmOut fused = rrm_bidirectional(Tensor::matrix(src), Tensor::matrix(shd), p);
  CHECK(fused.diff_fused.value().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rrm_direction matches a scalar-by-scalar oracle") {
  const Index n = 2, c = 3;
  Mat src(n, c), shd(n, c), wp(c, c), ws(c, c);
  src << 0.3, -0.5, 0.8, -0.1, 0.6, 0.2;
  shd << -0.4, 0.7, 0.1, 0.5, -0.2, 0.9;
  wp << 0.2, -0.1, 0.3, 0.4, 0.1, 0, -0.3, 0.2, 0.5;
  ws << 0.1, 0.3, -0.2, 0, 0.2, 0.4, 0.3, -0.1, 0.2;
  Vec bs(c);
  bs << 0.05, -0.1, 0.2;

  RrmParams p;
  p.w_p = Tensor::param(wp, "w_p");
  p.w_s = Tensor::param(ws, "w_s");
  p.b_s = Tensor::param_vector(bs, "b_s");
  p.w_f = Tensor::param(Mat::Zero(2 * c, c), "w_f");
  p.b_f = Tensor::param_vector(Vec::Zero(c), "b_f");

  RrmDirection d = rrm_direction(Tensor::matrix(src), Tensor::matrix(shd), p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < c; ++j) {
      Real pre = bs(j);
      for (Index t = 0; t < c; ++t) pre += src(i, t) * wp(t, j) + shd(i, t) * ws(t, j);
      const Real alpha = 1.0 / (1.0 + std::exp(-pre));
      CHECK(std::abs(d.alpha.value()(i, j) - alpha) <= 1e-12);
      CHECK(std::abs(d.reconstruction.value()(i, j) - alpha * shd(i, j)) <= 1e-12);
      CHECK(std::abs(d.difference.value()(i, j) - (src(i, j) - alpha * shd(i, j))) <= 1e-12);
    }
  }
}

TEST_CASE("rrm exchange symmetry is bitwise") {
  SplitMix64 rng(8);
  RrmParams p = random_rrm(5, rng);
  Mat a = random_mat(4, 5, rng);
  Mat b = random_mat(4, 5, rng);
  RrmOut ab = rrm_bidirectional(Tensor::matrix(a), Tensor::matrix(b), p);
  RrmOut ba = rrm_bidirectional(Tensor::matrix(b), Tensor::matrix(a), p);
  CHECK(std::memcmp(ab.diff_bef.value().data(), ba.diff_aft.value().data(),
                    sizeof(Real) * static_cast<std::size_t>(a.size())) == 0);
  CHECK(std::memcmp(ab.diff_aft.value().data(), ba.diff_bef.value().data(),
                    sizeof(Real) * static_cast<std::size_t>(a.size())) == 0);
}

TEST_CASE("rrm identity pair: equal directions and swap-invariant fusion") {
  SplitMix64 rng(9);
  RrmParams p = random_rrm(6, rng);
  Mat x = random_mat(3, 6, rng);
  RrmOut out = rrm_bidirectional(Tensor::matrix(x), Tensor::matrix(x), p);
  CHECK(std::memcmp(out.diff_bef.value().data(), out.diff_aft.value().data(),
                    sizeof(Real) * static_cast<std::size_t>(x.size())) == 0);
  RrmOut swapped = rrm_bidirectional(Tensor::matrix(x), Tensor::matrix(x), p);
  CHECK(std::memcmp(out.diff_fused.value().data(), swapped.diff_fused.value().data(),
                    sizeof(Real) * static_cast<std::size_t>(x.size())) == 0);

  // Response signals stay strictly inside (0,1).
  CHECK(out.alpha_bef.value().minCoeff() > 0.0);
  CHECK(out.alpha_bef.value().maxCoeff() < 1.0);
}

TEST_CASE("rrm gradient check") {
  SplitMix64 rng(10);
  RrmParams p = random_rrm(4, rng);
  Mat a = random_mat(3, 4, rng);
  Mat b = random_mat(3, 4, rng);
  Mat r = random_mat(3, 4, rng);
  const auto build = [&]() {
    RrmOut out = rrm_bidirectional(Tensor::matrix(a), Tensor::matrix(b), p);
    return sum(mul(out.diff_fused, Tensor::matrix(r)));
  };
  GradCheckOptions opts;
  opts.tolerance = 1e-5;
  const auto report = grad_check(build, {p.w_p, p.w_s, p.b_s, p.w_f, p.b_f}, opts);
  INFO(report.summary());
  CHECK(report.pass);
}

// ---------------------------------------------------------------- localizer

TEST_CASE("attention_map: zero parameters give 0.5 everywhere; per-location behaviour") {
  const Index c = 4;
  LocalizerParams p;
  p.conv1_w = Tensor::param(Mat::Zero(2 * c, c), "c1w");
  p.conv1_b = Tensor::param_vector(Vec::Zero(c), "c1b");
  p.conv2_w = Tensor::param(Mat::Zero(c, 1), "c2w");
  p.conv2_b = Tensor::param_vector(Vec::Zero(1), "c2b");
  p.w_d = Tensor::param(Mat::Zero(2 * c, c), "wd");
  p.b_d = Tensor::param_vector(Vec::Zero(c), "bd");

  SplitMix64 rng(11);
  Mat x = random_mat(5, c, rng);
  Mat diff = random_mat(5, c, rng);
  Tensor a = attention_map(Tensor::matrix(x), Tensor::matrix(diff), p);
  CHECK((a.value().array() - 0.5).abs().maxCoeff() == 0.0);

  // Identical [x ; diff] rows map to identical values.
  LocalizerParams q = random_localizer(c, rng);
  Mat xr = random_mat(1, c, rng).replicate(4, 1);
  Mat dr = random_mat(1, c, rng).replicate(4, 1);
  Tensor ar = attention_map(Tensor::matrix(xr), Tensor::matrix(dr), q);
  for (Index i = 1; i < 4; ++i) CHECK(ar.value()(i, 0) == ar.value()(0, 0));
}

TEST_CASE("attention_map matches a per-location scalar pipeline") {
  const Index c = 3;
  SplitMix64 rng(12);
  LocalizerParams p = random_localizer(c, rng);
  Mat x = random_mat(4, c, rng);
  Mat diff = random_mat(4, c, rng);
  Tensor a = attention_map(Tensor::matrix(x), Tensor::matrix(diff), p);
  for (Index i = 0; i < 4; ++i) {
    Vec cat(2 * c);
    cat.head(c) = x.row(i).transpose();
    cat.tail(c) = diff.row(i).transpose();
    Vec hidden =
        (p.conv1_w.value().transpose() * cat + p.conv1_b.value().row(0).transpose()).cwiseMax(0.0);
    const Real pre = (p.conv2_w.value().transpose() * hidden)(0) + p.conv2_b.value()(0, 0);
    const Real expected = 1.0 / (1.0 + std::exp(-pre));
    CHECK(std::abs(a.value()(i, 0) - expected) <= 1e-12);
    CHECK(a.value()(i, 0) > 0.0);
    CHECK(a.value()(i, 0) < 1.0);
  }
}

TEST_CASE("pool_changed selection identities") {
  SplitMix64 rng(13);
  Mat x = random_mat(6, 4, rng);
  Tensor ones = Tensor::matrix(Mat::Ones(6, 1));
  CHECK((pool_changed(Tensor::matrix(x), ones).value() - x.colwise().sum()).cwiseAbs().maxCoeff() <=
        1e-12);

  Tensor zeros = Tensor::matrix(Mat::Zero(6, 1));
  CHECK(pool_changed(Tensor::matrix(x), zeros).value().cwiseAbs().maxCoeff() == 0.0);

  Mat onehot = Mat::Zero(6, 1);
  onehot(3, 0) = 1.0;
  CHECK((pool_changed(Tensor::matrix(x), Tensor::matrix(onehot)).value() - x.row(3))
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("fuse_local_diff trivial cases and affine oracle") {
  const Index c = 4;
  SplitMix64 rng(14);
  LocalizerParams p = random_localizer(c, rng);

  Vec l(c);
  l << 0.2, -0.4, 0.6, 0.1;
  Tensor fused = fuse_local_diff(Tensor::vector(l), Tensor::vector(l), p);
  const Mat relu_bd = p.b_d.value().cwiseMax(0.0);
  CHECK((fused.value() - relu_bd).cwiseAbs().maxCoeff() <= 1e-15);

  LocalizerParams zero_wd = p;
  zero_wd.w_d = Tensor::param(Mat::Zero(2 * c, c), "wd0");
  Vec other = Vec::LinSpaced(c, -1.0, 1.0);
  Tensor fused2 = fuse_local_diff(Tensor::vector(l), Tensor::vector(other), zero_wd);
  CHECK((fused2.value() - relu_bd).cwiseAbs().maxCoeff() <= 1e-15);

  // Random case against direct evaluation.
  Vec a = Vec::LinSpaced(c, 0.5, -0.7);
  Mat pre = (l - a).transpose() * p.w_d.value().topRows(c) +
            (a - l).transpose() * p.w_d.value().bottomRows(c) + p.b_d.value();
  Mat expected = pre.cwiseMax(0.0);
  Tensor fused3 = fuse_local_diff(Tensor::vector(l), Tensor::vector(a), p);
  CHECK((fused3.value() - expected).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("localizer gradient check") {
  const Index c = 4;
  SplitMix64 rng(15);
  LocalizerParams p = random_localizer(c, rng);
  Mat xb = random_mat(5, c, rng);
  Mat xa = random_mat(5, c, rng);
  Mat diff = random_mat(5, c, rng);
  Mat r = random_mat(1, c, rng);
  const auto build = [&]() {
    Tensor ab = attention_map(Tensor::matrix(xb), Tensor::matrix(diff), p);
    Tensor aa = attention_map(Tensor::matrix(xa), Tensor::matrix(diff), p);
    Tensor lb = pool_changed(Tensor::matrix(xb), ab);
    Tensor la = pool_changed(Tensor::matrix(xa), aa);
    return sum(mul(fuse_local_diff(lb, la, p), as_vector(Tensor::matrix(r))));
  };
  GradCheckOptions opts;
  opts.tolerance = 1e-5;
  const auto report =
      grad_check(build, {p.conv1_w, p.conv1_b, p.conv2_w, p.conv2_b, p.w_d, p.b_d}, opts);
  INFO(report.summary());
  CHECK(report.pass);
}

// ---------------------------------------------------------------- ssp

TEST_CASE("global_repr: constant and zero grids; column-mean oracle") {
  Mat vb = Mat::Ones(4, 3) * 0.5;
  Mat va = Mat::Ones(4, 3) * -0.25;
  Mat vd = Mat::Ones(4, 3) * 2.0;
  Tensor s = global_repr(Tensor::matrix(vb), Tensor::matrix(va), Tensor::matrix(vd));
  REQUIRE(s.rank() == 1);
  REQUIRE(s.cols() == 9);
  for (Index j = 0; j < 3; ++j) {
    CHECK(s.value()(0, j) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(s.value()(0, 3 + j) == doctest::Approx(-0.25).epsilon(1e-15));
    CHECK(s.value()(0, 6 + j) == doctest::Approx(2.0).epsilon(1e-15));
  }

  Tensor z = global_repr(Tensor::matrix(Mat::Zero(4, 3)), Tensor::matrix(Mat::Zero(4, 3)),
                         Tensor::matrix(Mat::Zero(4, 3)));
  CHECK(z.value().cwiseAbs().maxCoeff() == 0.0);

  SplitMix64 rng(16);
  Mat b = random_mat(5, 3, rng), a = random_mat(5, 3, rng), d = random_mat(5, 3, rng);
  Tensor sr = global_repr(Tensor::matrix(b), Tensor::matrix(a), Tensor::matrix(d));
  for (Index j = 0; j < 3; ++j) {
    CHECK(std::abs(sr.value()(0, j) - b.col(j).mean()) <= 1e-12);
    CHECK(std::abs(sr.value()(0, 3 + j) - a.col(j).mean()) <= 1e-12);
    CHECK(std::abs(sr.value()(0, 6 + j) - d.col(j).mean()) <= 1e-12);
  }
}

TEST_CASE("predict_skeletons: zero parameters, saturation, scalar pipeline") {
  const Index in = 6, dg = 4, k = 2;
  SspParams p;
  p.w_g = Tensor::param(Mat::Zero(in, dg), "w_g");
  p.b_g1 = Tensor::param_vector(Vec::Zero(dg), "b_g1");
  p.u_g = Tensor::param(Mat::Zero(dg, k), "u_g");
  p.b_g = Tensor::param_vector(Vec::Zero(k), "b_g");

  Tensor s = Tensor::vector(Vec::LinSpaced(in, -1.0, 1.0));
  Tensor probs = predict_skeletons(s, p);
  CHECK((probs.value().array() - 0.5).abs().maxCoeff() == 0.0);

  Vec bg(k);
  bg << 20.0, 0.0;
  p.b_g = Tensor::param_vector(bg, "b_g");
  Tensor sat = predict_skeletons(s, p);
  CHECK(std::abs(sat.value()(0, 0) - 1.0) <= 1e-8);

  // Hand-set two-skeleton case evaluated scalar by scalar.
  SplitMix64 rng(17);
  SspParams q;
  q.w_g = Tensor::param(random_mat(in, dg, rng), "w_g");
  q.b_g1 = Tensor::param_vector(Vec::LinSpaced(dg, -0.2, 0.4), "b_g1");
  q.u_g = Tensor::param(random_mat(dg, k, rng), "u_g");
  q.b_g = Tensor::param_vector(Vec::LinSpaced(k, 0.1, -0.1), "b_g");
  Tensor pr = predict_skeletons(s, q);
  Vec hidden =
      (q.w_g.value().transpose() * s.value().row(0).transpose() + q.b_g1.value().row(0).transpose())
          .cwiseMax(0.0);
  for (Index j = 0; j < k; ++j) {
    Real pre = q.b_g.value()(0, j);
    for (Index t = 0; t < dg; ++t) pre += hidden(t) * q.u_g.value()(t, j);
    CHECK(std::abs(pr.value()(0, j) - 1.0 / (1.0 + std::exp(-pre))) <= 1e-12);
  }
}

TEST_CASE("multilabel loss closed forms") {
  // K=1, y=1, p=0.5 -> ln 2.
  Tensor p = Tensor::vector({0.5});
  Tensor y = Tensor::vector({1.0});
  CHECK(std::abs(multilabel_bce(p, y).item() - std::log(2.0)) <= 1e-12);

  // Perfect saturated prediction: loss bounded by the clamp floor.
  const Index k = 5;
  Vec labels(k);
  labels << 1, 0, 1, 1, 0;
  Tensor probs = Tensor::vector(Vec(labels));
  const Real loss = multilabel_bce(probs, Tensor::vector(labels)).item();
  CHECK(loss >= 0.0);
  CHECK(loss <= static_cast<Real>(k) * -std::log(1.0 - kProbClamp) + 1e-9);

  CHECK_THROWS_AS(multilabel_bce(Tensor::vector({0.5}), Tensor::vector({0.5})),
                  std::invalid_argument);
}

TEST_CASE("multilabel loss is invariant under consistent index permutation") {
  SplitMix64 rng(18);
  const Index k = 7;
  Vec p(k), y(k);
  for (Index i = 0; i < k; ++i) {
    p(i) = rng.uniform(0.05, 0.95);
    y(i) = static_cast<Real>(rng.below(2));
  }
  std::vector<Index> perm{3, 6, 0, 2, 5, 1, 4};
  Vec pp(k), yp(k);
  for (Index i = 0; i < k; ++i) {
    pp(i) = p(perm[static_cast<std::size_t>(i)]);
    yp(i) = y(perm[static_cast<std::size_t>(i)]);
  }
  const Real a = multilabel_bce(Tensor::vector(p), Tensor::vector(y)).item();
  const Real b = multilabel_bce(Tensor::vector(pp), Tensor::vector(yp)).item();
  CHECK(std::abs(a - b) <= 1e-12);
}

TEST_CASE("multilabel loss gradient w.r.t. logits equals (p - y) / N_b") {
  SplitMix64 rng(19);
  const Index k = 6;
  const int batch = 3;
  std::vector<Tensor> logit_params;
  std::vector<Tensor> probs, labels;
  std::vector<Vec> ys;
  for (int b = 0; b < batch; ++b) {
    Tensor logits = Tensor::param(random_mat(1, k, rng), "logits" + std::to_string(b));
    logit_params.push_back(logits);
    probs.push_back(sigmoid(as_vector(logits)));
    Vec y(k);
    for (Index i = 0; i < k; ++i) y(i) = static_cast<Real>(rng.below(2));
    ys.push_back(y);
    labels.push_back(Tensor::vector(y));
  }
  Tensor loss = multilabel_loss(probs, labels);
  backward(loss);
  for (int b = 0; b < batch; ++b) {
    const Mat expected = (probs[static_cast<std::size_t>(b)].value() -
                          ys[static_cast<std::size_t>(b)].transpose()) /
                         static_cast<Real>(batch);
    CHECK((logit_params[static_cast<std::size_t>(b)].grad() - expected).cwiseAbs().maxCoeff() <=
          1e-12);
  }
}

TEST_CASE("ssp gradient check through the multi-label loss") {
  SplitMix64 rng(20);
  const Index c = 3, n = 4, dg = 5, k = 4;
  SspParams p;
  p.w_g = Tensor::param(random_mat(3 * c, dg, rng), "w_g");
  p.b_g1 = Tensor::param_vector(Vec::LinSpaced(dg, -0.2, 0.3), "b_g1");
  p.u_g = Tensor::param(random_mat(dg, k, rng), "u_g");
  p.b_g = Tensor::param_vector(Vec::LinSpaced(k, -0.1, 0.1), "b_g");
  Mat xb = random_mat(n, c, rng), xa = random_mat(n, c, rng), xd = random_mat(n, c, rng);
  Vec y(k);
  y << 1, 0, 0, 1;
  const auto build = [&]() {
    Tensor s = global_repr(Tensor::matrix(xb), Tensor::matrix(xa), Tensor::matrix(xd));
    return multilabel_bce(predict_skeletons(s, p), Tensor::vector(y));
  };
  GradCheckOptions opts;
  opts.tolerance = 1e-5;
  const auto report = grad_check(build, {p.w_g, p.b_g1, p.u_g, p.b_g}, opts);
  INFO(report.summary());
  CHECK(report.pass);
}
