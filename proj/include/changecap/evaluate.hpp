#pragma once

#include "changecap/datagen.hpp"
#include "changecap/metrics.hpp"
#include "changecap/model.hpp"

#include <map>
#include <string>
#include <vector>

namespace changecap {

// Greedy caption for one encoded pair; returns vocabulary token ids.
std::vector<Index> decode_caption(const ModelState& model, const Mat& grid_bef,
                                  const Mat& grid_aft);

TokenSeq ids_to_tokens(const std::vector<Index>& ids);

// Row-major-first argmax of an N x 1 attention map as a grid cell.
Cell argmax_cell(const Mat& map, Index width);

struct KindBreakdown {
  int count = 0;
  Real cider = 0.0;
  Real change_type_accuracy = 0.0;
  Real pointing_accuracy = 0.0;
  Real exact_match = 0.0;
};

struct EvalReport {
  int pairs = 0;
  Real bleu4 = 0.0;
  Real rouge_l = 0.0;
  Real cider = 0.0;
  Real change_type_accuracy = 0.0;
  Real pointing_accuracy = 0.0;
  Real exact_match = 0.0;
  Real skeleton_recall = 0.0;  // recall at 0.5, SSP variants only
  std::map<std::string, KindBreakdown> by_kind;  // Color/Texture/Add/Drop/Move

  std::string to_json() const;
};

// Decodes and scores the pairs selected by `indices` (all pairs when empty).
EvalReport evaluate_model(const ModelState& model, const Corpus& corpus,
                          const std::vector<int>& indices = {});

}  // namespace changecap
