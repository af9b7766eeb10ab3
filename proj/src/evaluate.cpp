#include "changecap/evaluate.hpp"

#include <json.hpp>

#include <stdexcept>

namespace changecap {

std::vector<Index> decode_caption(const ModelState& model, const Mat& grid_bef,
                                  const Mat& grid_aft) {
  NoGradGuard ng;
  Forward f = model_forward(model, grid_bef, grid_aft);
  const auto& vocab = Vocabulary::instance();
  return greedy_decode(f.local, f.skel_feature, model.decoder, vocab.bos(), vocab.eos(),
                       model.dims.max_len);
}

TokenSeq ids_to_tokens(const std::vector<Index>& ids) {
  const auto& vocab = Vocabulary::instance();
  TokenSeq out;
  out.reserve(ids.size());
  for (Index id : ids) out.push_back(vocab.token(static_cast<int>(id)));
  return out;
}

Cell argmax_cell(const Mat& map, Index width) {
  Index best = 0;
  for (Index i = 1; i < map.rows(); ++i) {
    if (map(i, 0) > map(best, 0)) best = i;
  }
  return Cell{static_cast<int>(best / width), static_cast<int>(best % width)};
}

std::string EvalReport::to_json() const {
  nlohmann::json by;
  for (const auto& [kind, b] : by_kind) {
    by[kind] = {{"count", b.count},
                {"cider", b.cider},
                {"change_type_accuracy", b.change_type_accuracy},
                {"pointing_accuracy", b.pointing_accuracy},
                {"exact_match", b.exact_match}};
  }
  nlohmann::json j{{"pairs", pairs},
                   {"bleu4", bleu4},
                   {"rouge_l", rouge_l},
                   {"cider", cider},
                   {"change_type_accuracy", change_type_accuracy},
                   {"pointing_accuracy", pointing_accuracy},
                   {"exact_match", exact_match},
                   {"skeleton_recall", skeleton_recall},
                   {"by_kind", by}};
  return j.dump(2);
}

EvalReport evaluate_model(const ModelState& model, const Corpus& corpus,
                          const std::vector<int>& indices) {
  std::vector<int> idx = indices;
  if (idx.empty()) {
    idx.resize(corpus.pairs.size());
    for (std::size_t i = 0; i < corpus.pairs.size(); ++i) idx[i] = static_cast<int>(i);
  }
  if (corpus.pairs.empty()) throw std::invalid_argument("evaluate_model: empty corpus");

  NoGradGuard ng;
  const auto& vocab = Vocabulary::instance();

  std::vector<TokenSeq> hyps, refs;
  std::vector<ChangeKind> kinds;
  std::vector<PointingSample> pointing;
  long skel_hits = 0, skel_positives = 0;
  int exact = 0;

  for (int i : idx) {
    const ScenePair& pair = corpus.pairs[static_cast<std::size_t>(i)];
    Forward f = model_forward(model, corpus.grids_before[static_cast<std::size_t>(i)],
                              corpus.grids_after[static_cast<std::size_t>(i)]);
    const std::vector<Index> ids = greedy_decode(f.local, f.skel_feature, model.decoder,
                                                 vocab.bos(), vocab.eos(), model.dims.max_len);
    TokenSeq hyp = ids_to_tokens(ids);
    if (hyp == pair.caption) ++exact;
    hyps.push_back(std::move(hyp));
    refs.push_back(pair.caption);
    kinds.push_back(pair.change.kind);

    PointingSample ps;
    ps.distractor = pair.change.kind == ChangeKind::Distractor;
    ps.argmax_bef = argmax_cell(f.a_bef.value(), model.dims.grid_w);
    ps.argmax_aft = argmax_cell(f.a_aft.value(), model.dims.grid_w);
    ps.cells_bef = pair.change.cells_before;
    ps.cells_aft = encoded_after_cells(pair, corpus.config);
    pointing.push_back(std::move(ps));

    if (model.has_ssp()) {
      const Mat& p = f.skel_probs.value();
      for (int s : pair.skeletons) {
        ++skel_positives;
        if (p(0, s) >= 0.5) ++skel_hits;
      }
    }
  }

  EvalReport report;
  report.pairs = static_cast<int>(idx.size());
  report.bleu4 = bleu4(hyps, refs);
  report.rouge_l = rouge_l(hyps, refs);
  report.cider = cider(hyps, refs);
  report.change_type_accuracy = change_type_accuracy(hyps, kinds);
  report.pointing_accuracy = pointing_accuracy(pointing);
  report.exact_match = static_cast<Real>(exact) / static_cast<Real>(idx.size());
  report.skeleton_recall =
      skel_positives == 0 ? 0.0
                          : static_cast<Real>(skel_hits) / static_cast<Real>(skel_positives);

  for (ChangeKind kind : {ChangeKind::Color, ChangeKind::Texture, ChangeKind::Add,
                          ChangeKind::Drop, ChangeKind::Move}) {
    std::vector<TokenSeq> kh, kr;
    std::vector<ChangeKind> kk;
    std::vector<PointingSample> kp;
    int kexact = 0;
    for (std::size_t j = 0; j < kinds.size(); ++j) {
      if (kinds[j] != kind) continue;
      kh.push_back(hyps[j]);
      kr.push_back(refs[j]);
      kk.push_back(kinds[j]);
      kp.push_back(pointing[j]);
      if (hyps[j] == refs[j]) ++kexact;
    }
    KindBreakdown b;
    b.count = static_cast<int>(kh.size());
    if (!kh.empty()) {
      b.cider = cider(kh, kr);
      b.change_type_accuracy = change_type_accuracy(kh, kk);
      b.pointing_accuracy = pointing_accuracy(kp);
      b.exact_match = static_cast<Real>(kexact) / static_cast<Real>(kh.size());
    }
    report.by_kind[change_kind_name(kind)] = b;
  }
  return report;
}

}  // namespace changecap
