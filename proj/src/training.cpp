#include "changecap/training.hpp"

#include "changecap/evaluate.hpp"
#include "changecap/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace changecap {

namespace {

using nlohmann::json;

Variant variant_or_throw(const std::string& s) {
  auto v = variant_from_name(s);
  if (!v) throw std::runtime_error("unknown variant '" + s + "'");
  return *v;
}

}  // namespace

std::string TrainConfig::to_json() const {
  json j{{"variant", variant_name(variant)},
         {"lambda", lambda},
         {"lr", lr},
         {"beta1", beta1},
         {"beta2", beta2},
         {"adam_eps", adam_eps},
         {"batch_size", batch_size},
         {"epochs", epochs},
         {"holdout", holdout},
         {"seed", seed},
         {"dims",
          {{"grid_h", dims.grid_h},
           {"grid_w", dims.grid_w},
           {"c_in", dims.c_in},
           {"c", dims.c},
           {"heads", dims.heads},
           {"c_mid", dims.c_mid},
           {"d_g", dims.d_g},
           {"k", dims.k},
           {"m", dims.m},
           {"m_w", dims.m_w},
           {"h_a", dims.h_a},
           {"h_c", dims.h_c},
           {"vocab", dims.vocab},
           {"max_len", dims.max_len}}}};
  return j.dump();
}

TrainConfig TrainConfig::from_json(const std::string& s) {
  json j = json::parse(s);
  TrainConfig c;
  c.variant = variant_or_throw(j.at("variant").get<std::string>());
  c.lambda = j.at("lambda").get<Real>();
  c.lr = j.at("lr").get<Real>();
  c.beta1 = j.at("beta1").get<Real>();
  c.beta2 = j.at("beta2").get<Real>();
  c.adam_eps = j.at("adam_eps").get<Real>();
  c.batch_size = j.at("batch_size").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.holdout = j.at("holdout").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  const json& d = j.at("dims");
  c.dims.grid_h = d.at("grid_h").get<Index>();
  c.dims.grid_w = d.at("grid_w").get<Index>();
  c.dims.c_in = d.at("c_in").get<Index>();
  c.dims.c = d.at("c").get<Index>();
  c.dims.heads = d.at("heads").get<Index>();
  c.dims.c_mid = d.at("c_mid").get<Index>();
  c.dims.d_g = d.at("d_g").get<Index>();
  c.dims.k = d.at("k").get<Index>();
  c.dims.m = d.at("m").get<Index>();
  c.dims.m_w = d.at("m_w").get<Index>();
  c.dims.h_a = d.at("h_a").get<Index>();
  c.dims.h_c = d.at("h_c").get<Index>();
  c.dims.vocab = d.at("vocab").get<Index>();
  c.dims.max_len = d.at("max_len").get<Index>();
  return c;
}

std::vector<Sample> make_samples(const Corpus& corpus) {
  const auto& vocab = Vocabulary::instance();
  std::vector<Sample> out;
  out.reserve(corpus.pairs.size());
  for (std::size_t i = 0; i < corpus.pairs.size(); ++i) {
    const ScenePair& p = corpus.pairs[i];
    Sample s;
    s.grid_bef = &corpus.grids_before[i];
    s.grid_aft = &corpus.grids_after[i];
    for (const std::string& t : p.caption) s.targets.push_back(vocab.id(t));
    s.targets.push_back(vocab.eos());
    s.labels = skeleton_label_vector(p.skeletons);
    out.push_back(std::move(s));
  }
  return out;
}

void adam_step(ModelState& model, AdamState& adam, Real lr, Real beta1, Real beta2, Real eps) {
  adam.step += 1;
  const Real bc1 = 1.0 - std::pow(beta1, static_cast<Real>(adam.step));
  const Real bc2 = 1.0 - std::pow(beta2, static_cast<Real>(adam.step));
  for (Tensor p : model.parameters()) {
    const Mat grad = p.has_grad() ? p.grad() : Mat::Zero(p.rows(), p.cols()).eval();
    if (!grad.allFinite()) {
      throw NumericError("adam_step: non-finite gradient in '" + p.name() + "'");
    }
    auto& [m, v] = adam.moments[p.name()];
    if (m.size() == 0) {
      m = Mat::Zero(p.rows(), p.cols());
      v = Mat::Zero(p.rows(), p.cols());
    }
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const Mat m_hat = m / bc1;
    const Mat v_hat = v / bc2;
    p.mutable_value().array() -= lr * m_hat.array() / (v_hat.array().sqrt() + eps);
  }
}

namespace {

struct SampleLoss {
  Tensor nll;
  Tensor bce;  // invalid for variants without SSP
};

SampleLoss sample_loss(const ModelState& model, const Sample& s) {
  Forward f = model_forward(model, *s.grid_bef, *s.grid_aft);
  SampleLoss out;
  out.nll = caption_nll(s.targets, f.local, f.skel_feature, model.decoder,
                        Vocabulary::instance().bos());
  if (model.has_ssp()) {
    out.bce = multilabel_bce(f.skel_probs, Tensor::vector(s.labels));
  }
  return out;
}

}  // namespace

JointLoss joint_loss(const ModelState& model, const std::vector<Sample>& batch, Real lambda) {
  if (batch.empty()) throw std::invalid_argument("joint_loss: empty batch");
  if (lambda < 0.0) throw std::invalid_argument("joint_loss: lambda must be >= 0");
  JointLoss out;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    SampleLoss sl = sample_loss(model, batch[i]);
    out.caption = i == 0 ? sl.nll : add(out.caption, sl.nll);
    if (model.has_ssp()) {
      out.skeleton = i == 0 ? sl.bce : add(out.skeleton, sl.bce);
    }
  }
  const Real inv = 1.0 / static_cast<Real>(batch.size());
  out.caption = scale(out.caption, inv);
  if (model.has_ssp()) {
    out.skeleton = scale(out.skeleton, inv);
    out.total = add(out.caption, scale(out.skeleton, lambda));
  } else {
    out.skeleton = Tensor::scalar(0.0);
    out.total = out.caption;
  }
  return out;
}

TrainResult train(const Corpus& corpus, const TrainConfig& cfg, std::ostream* progress) {
  if (cfg.holdout < 0 || cfg.holdout >= static_cast<int>(corpus.pairs.size())) {
    throw std::invalid_argument("train: holdout must leave at least one training pair");
  }
  if (cfg.batch_size < 1 || cfg.epochs < 1) {
    throw std::invalid_argument("train: batch_size and epochs must be positive");
  }

  const std::vector<Sample> samples = make_samples(corpus);
  const int n_train = static_cast<int>(samples.size()) - cfg.holdout;

  std::vector<int> holdout_idx;
  for (int i = n_train; i < static_cast<int>(samples.size()); ++i) holdout_idx.push_back(i);

  TrainResult result;
  result.model = ModelState::init(cfg.dims, cfg.variant, cfg.seed);

  std::vector<int> order(static_cast<std::size_t>(n_train));
  for (int i = 0; i < n_train; ++i) order[static_cast<std::size_t>(i)] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    SplitMix64 shuffle_rng(SplitMix64::split(cfg.seed, 0x100000ull + static_cast<std::uint64_t>(epoch)));
    seeded_shuffle(order, shuffle_rng);

    Real sum_nll = 0.0, sum_bce = 0.0;
    int done = 0;
    while (done < n_train) {
      const int bn = std::min(cfg.batch_size, n_train - done);
      result.model.zero_grads();
      for (int b = 0; b < bn; ++b) {
        const Sample& s = samples[static_cast<std::size_t>(order[static_cast<std::size_t>(done + b)])];
        SampleLoss sl = sample_loss(result.model, s);
        sum_nll += sl.nll.item();
        Tensor contribution = scale(sl.nll, 1.0 / bn);
        if (result.model.has_ssp()) {
          sum_bce += sl.bce.item();
          contribution = add(contribution, scale(sl.bce, cfg.lambda / bn));
        }
        backward(contribution);
      }
      adam_step(result.model, result.adam, cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);
      done += bn;
    }
    result.model.zero_grads();

    const Real mean_nll = sum_nll / n_train;
    const Real mean_bce = result.model.has_ssp() ? sum_bce / n_train : 0.0;
    const Real mean_total = mean_nll + cfg.lambda * mean_bce;

    json rec{{"epoch", epoch},
             {"loss", mean_total},
             {"loss_cap", mean_nll},
             {"loss_s", mean_bce}};

    if (!holdout_idx.empty()) {
      NoGradGuard ng;
      const auto& vocab = Vocabulary::instance();
      std::vector<TokenSeq> hyps;
      std::vector<ChangeKind> kinds;
      std::vector<PointingSample> pointing;
      long skel_hits = 0, skel_pos = 0;
      int exact = 0;
      for (int i : holdout_idx) {
        const ScenePair& pair = corpus.pairs[static_cast<std::size_t>(i)];
        Forward f = model_forward(result.model, corpus.grids_before[static_cast<std::size_t>(i)],
                                  corpus.grids_after[static_cast<std::size_t>(i)]);
        const auto ids = greedy_decode(f.local, f.skel_feature, result.model.decoder, vocab.bos(),
                                       vocab.eos(), result.model.dims.max_len);
        TokenSeq hyp = ids_to_tokens(ids);
        if (hyp == pair.caption) ++exact;
        hyps.push_back(std::move(hyp));
        kinds.push_back(pair.change.kind);

        PointingSample ps;
        ps.distractor = pair.change.kind == ChangeKind::Distractor;
        ps.argmax_bef = argmax_cell(f.a_bef.value(), result.model.dims.grid_w);
        ps.argmax_aft = argmax_cell(f.a_aft.value(), result.model.dims.grid_w);
        ps.cells_bef = pair.change.cells_before;
        ps.cells_aft = encoded_after_cells(pair, corpus.config);
        pointing.push_back(std::move(ps));

        if (result.model.has_ssp()) {
          for (int s : pair.skeletons) {
            ++skel_pos;
            if (f.skel_probs.value()(0, s) >= 0.5) ++skel_hits;
          }
        }
      }
      rec["holdout_change_type_accuracy"] = change_type_accuracy(hyps, kinds);
      rec["holdout_exact_match"] =
          static_cast<Real>(exact) / static_cast<Real>(holdout_idx.size());
      rec["holdout_pointing_accuracy"] = pointing_accuracy(pointing);
      if (skel_pos > 0) {
        rec["holdout_skeleton_recall"] =
            static_cast<Real>(skel_hits) / static_cast<Real>(skel_pos);
      }
    }

    result.metrics_log.push_back(rec.dump());
    if (progress) (*progress) << result.metrics_log.back() << std::endl;
  }
  return result;
}

void save_training_checkpoint(const std::string& path, const ModelState& model,
                              const AdamState& adam, const TrainConfig& cfg) {
  std::vector<std::pair<std::string, Mat>> extra;
  for (const auto& [name, mv] : adam.moments) {
    extra.emplace_back("adam.m." + name, mv.first);
    extra.emplace_back("adam.v." + name, mv.second);
  }
  Mat step(1, 1);
  step(0, 0) = static_cast<Real>(adam.step);
  extra.emplace_back("adam.step", step);
  save_checkpoint(path, model, cfg.to_json(), extra);
}

LoadedTraining load_training_checkpoint(const std::string& path) {
  LoadedCheckpoint base = load_checkpoint(path);
  LoadedTraining out;
  out.model = std::move(base.model);
  if (base.config_json.empty()) {
    throw std::runtime_error("checkpoint: missing training config in " + path);
  }
  out.config = TrainConfig::from_json(base.config_json);
  for (auto& [name, mat] : base.extra) {
    if (name == "adam.step") {
      out.adam.step = static_cast<std::int64_t>(mat(0, 0));
    } else if (name.starts_with("adam.m.")) {
      out.adam.moments[name.substr(7)].first = std::move(mat);
    } else if (name.starts_with("adam.v.")) {
      out.adam.moments[name.substr(7)].second = std::move(mat);
    }
  }
  return out;
}

}  // namespace changecap
