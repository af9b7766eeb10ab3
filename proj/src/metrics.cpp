#include "changecap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace changecap {

namespace {

using Ngram = std::vector<std::string>;
using NgramCounts = std::map<Ngram, int>;

NgramCounts count_ngrams(const TokenSeq& s, int n) {
  NgramCounts out;
  if (static_cast<int>(s.size()) < n) return out;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= s.size(); ++i) {
    out[Ngram(s.begin() + static_cast<std::ptrdiff_t>(i),
              s.begin() + static_cast<std::ptrdiff_t>(i + static_cast<std::size_t>(n)))] += 1;
  }
  return out;
}

void check_corpus(const std::vector<TokenSeq>& hyp, const std::vector<TokenSeq>& ref,
                  const char* op) {
  if (hyp.empty() || hyp.size() != ref.size()) {
    throw std::invalid_argument(std::string(op) +
                                ": need a nonempty corpus with one reference per hypothesis");
  }
}

int lcs_length(const TokenSeq& a, const TokenSeq& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<int> prev(m + 1, 0), cur(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

}  // namespace

Real bleu4(const std::vector<TokenSeq>& hypotheses, const std::vector<TokenSeq>& references) {
  check_corpus(hypotheses, references, "bleu4");
  long hyp_len = 0, ref_len = 0;
  long matched[4] = {0, 0, 0, 0};
  long total[4] = {0, 0, 0, 0};

  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    hyp_len += static_cast<long>(hypotheses[i].size());
    ref_len += static_cast<long>(references[i].size());
    for (int n = 1; n <= 4; ++n) {
      NgramCounts h = count_ngrams(hypotheses[i], n);
      NgramCounts r = count_ngrams(references[i], n);
      for (const auto& [gram, count] : h) {
        total[n - 1] += count;
        auto it = r.find(gram);
        if (it != r.end()) matched[n - 1] += std::min(count, it->second);
      }
    }
  }

  Real log_precision_sum = 0.0;
  for (int n = 0; n < 4; ++n) {
    Real p;
    if (total[n] == 0) {
      p = 1.0;  // no n-grams of this order anywhere; treat as uninformative
    } else if (matched[n] == 0) {
      if (n == 0) return 0.0;  // zero unigram precision is a hard zero
      p = static_cast<Real>(matched[n] + 1) / static_cast<Real>(total[n] + 1);
    } else {
      p = static_cast<Real>(matched[n]) / static_cast<Real>(total[n]);
    }
    log_precision_sum += std::log(p);
  }

  const Real bp =
      hyp_len >= ref_len || hyp_len == 0
          ? (hyp_len == 0 ? 0.0 : 1.0)
          : std::exp(1.0 - static_cast<Real>(ref_len) / static_cast<Real>(hyp_len));
  return bp * std::exp(log_precision_sum / 4.0);
}

Real rouge_l(const std::vector<TokenSeq>& hypotheses, const std::vector<TokenSeq>& references) {
  check_corpus(hypotheses, references, "rouge_l");
  constexpr Real beta_sq = 1.2;
  Real sum = 0.0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const auto& h = hypotheses[i];
    const auto& r = references[i];
    if (h.empty() || r.empty()) continue;
    const int lcs = lcs_length(h, r);
    if (lcs == 0) continue;
    const Real prec = static_cast<Real>(lcs) / static_cast<Real>(h.size());
    const Real rec = static_cast<Real>(lcs) / static_cast<Real>(r.size());
    sum += (1.0 + beta_sq) * prec * rec / (rec + beta_sq * prec);
  }
  return sum / static_cast<Real>(hypotheses.size());
}

Real cider(const std::vector<TokenSeq>& hypotheses, const std::vector<TokenSeq>& references) {
  check_corpus(hypotheses, references, "cider");
  constexpr Real sigma = 6.0;
  const Real n_refs = static_cast<Real>(references.size());

  // Document frequency of each n-gram over the reference set.
  std::map<Ngram, int> df;
  for (const TokenSeq& r : references) {
    std::set<Ngram> seen;
    for (int n = 1; n <= 4; ++n) {
      for (const auto& [gram, count] : count_ngrams(r, n)) seen.insert(gram);
    }
    for (const auto& gram : seen) df[gram] += 1;
  }

  const auto tfidf = [&](const TokenSeq& s, int n) {
    std::map<Ngram, Real> vec;
    for (const auto& [gram, count] : count_ngrams(s, n)) {
      auto it = df.find(gram);
      const Real d = it == df.end() ? 0.0 : static_cast<Real>(it->second);
      vec[gram] = static_cast<Real>(count) * std::log(n_refs / std::max(1.0, d));
    }
    return vec;
  };

  Real total_score = 0.0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const Real delta =
        static_cast<Real>(hypotheses[i].size()) - static_cast<Real>(references[i].size());
    const Real penalty = std::exp(-delta * delta / (2.0 * sigma * sigma));
    Real score = 0.0;
    for (int n = 1; n <= 4; ++n) {
      const auto vh = tfidf(hypotheses[i], n);
      const auto vr = tfidf(references[i], n);
      Real dot = 0.0, nh = 0.0, nr = 0.0;
      for (const auto& [gram, w] : vh) nh += w * w;
      for (const auto& [gram, w] : vr) nr += w * w;
      for (const auto& [gram, w] : vh) {
        auto it = vr.find(gram);
        if (it != vr.end()) dot += std::min(w, it->second) * it->second;
      }
      if (nh > 0.0 && nr > 0.0) score += penalty * dot / (std::sqrt(nh) * std::sqrt(nr));
    }
    total_score += score / 4.0;
  }
  return 10.0 * total_score / static_cast<Real>(hypotheses.size());
}

Real change_type_accuracy(const std::vector<TokenSeq>& hypotheses,
                          const std::vector<ChangeKind>& ground_truth) {
  if (hypotheses.size() != ground_truth.size() || hypotheses.empty()) {
    throw std::invalid_argument("change_type_accuracy: mismatched or empty inputs");
  }
  int hit = 0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const auto kind = kind_from_caption(hypotheses[i]);
    if (kind && *kind == ground_truth[i]) ++hit;
  }
  return static_cast<Real>(hit) / static_cast<Real>(hypotheses.size());
}

Real pointing_accuracy(const std::vector<PointingSample>& samples) {
  int considered = 0, hit = 0;
  for (const PointingSample& s : samples) {
    if (s.distractor) continue;
    ++considered;
    const bool bef_hit =
        std::find(s.cells_bef.begin(), s.cells_bef.end(), s.argmax_bef) != s.cells_bef.end();
    const bool aft_hit =
        std::find(s.cells_aft.begin(), s.cells_aft.end(), s.argmax_aft) != s.cells_aft.end();
    if (bef_hit && aft_hit) ++hit;
  }
  if (considered == 0) return 0.0;
  return static_cast<Real>(hit) / static_cast<Real>(considered);
}

}  // namespace changecap
