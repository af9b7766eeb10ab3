#pragma once

#include "changecap/datagen.hpp"
#include "changecap/types.hpp"

#include <string>
#include <vector>

namespace changecap {

using TokenSeq = std::vector<std::string>;

// Corpus-level BLEU-4: geometric mean of modified n-gram precisions (n=1..4)
// with brevity penalty. When a precision is zero for n >= 2, counts are
// add-one smoothed for that order; a zero unigram precision keeps the score 0.
Real bleu4(const std::vector<TokenSeq>& hypotheses, const std::vector<TokenSeq>& references);

// Mean per-pair LCS F-measure with beta^2 = 1.2.
Real rouge_l(const std::vector<TokenSeq>& hypotheses, const std::vector<TokenSeq>& references);

// Average over n=1..4 of clipped TF-IDF cosine similarity, Gaussian length
// penalty (sigma = 6), scaled by 10. Document frequencies come from the
// reference set.
Real cider(const std::vector<TokenSeq>& hypotheses, const std::vector<TokenSeq>& references);

// Fraction of hypotheses whose template parse recovers the true change kind;
// unparseable hypotheses count as wrong.
Real change_type_accuracy(const std::vector<TokenSeq>& hypotheses,
                          const std::vector<ChangeKind>& ground_truth);

struct PointingSample {
  Cell argmax_bef;
  Cell argmax_aft;
  std::vector<Cell> cells_bef;  // ground truth, before-image coordinates
  std::vector<Cell> cells_aft;  // ground truth, after-encoding coordinates
  bool distractor = false;
};

// Fraction of non-Distractor pairs where both argmax cells fall inside their
// ground-truth cell sets. Distractor pairs are excluded from the denominator.
Real pointing_accuracy(const std::vector<PointingSample>& samples);

}  // namespace changecap
