#pragma once

#include "changecap/decoder.hpp"
#include "changecap/localizer.hpp"
#include "changecap/relation.hpp"
#include "changecap/rrm.hpp"
#include "changecap/ssp.hpp"
#include "changecap/tensor.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace changecap {

// Ablation ladder: Baseline uses direct feature subtraction; RRM replaces it
// with bidirectional reconstruction; R3Net adds relation embedding; R3NetSSP
// adds skeleton prediction and skeleton-guided decoding.
enum class Variant { Baseline, RRM, R3Net, R3NetSSP };

const std::string& variant_name(Variant v);                     // "baseline" .. "r3net-ssp"
std::optional<Variant> variant_from_name(const std::string& s);

struct Dims {
  Index grid_h = 8;
  Index grid_w = 8;
  Index c_in = 48;
  Index c = 32;       // projected feature width
  Index heads = 4;
  Index c_mid = 32;   // localizer 1x1-conv width
  Index d_g = 64;     // SSP inner width
  Index k = 29;       // skeleton vocabulary size
  Index m = 32;       // skeleton feature dim
  Index m_w = 32;     // word embedding dim
  Index h_a = 64;
  Index h_c = 64;
  Index vocab = 40;
  Index max_len = 20;

  Index locations() const { return grid_h * grid_w; }
};

struct ModelState {
  Dims dims;
  Variant variant = Variant::R3NetSSP;

  Tensor w_in;  // C_in x C, shared projection (all variants)
  RelationParams relation;
  RrmParams rrm;
  LocalizerParams localizer;
  SspParams ssp;
  DecoderParams decoder;

  bool has_relation() const { return variant == Variant::R3Net || variant == Variant::R3NetSSP; }
  bool has_rrm() const { return variant != Variant::Baseline; }
  bool has_ssp() const { return variant == Variant::R3NetSSP; }

  // Every learnable tensor of the active variant, in a fixed order.
  std::vector<Tensor> parameters() const;
  void zero_grads();
  Index parameter_count() const;

  static ModelState init(const Dims& dims, Variant variant, std::uint64_t seed);
};

// Full forward pass over one encoded pair.
struct Forward {
  Tensor x_bef;       // N x C working features
  Tensor x_aft;
  Tensor diff;        // N x C difference fed to the localizer
  std::optional<RrmOut> rrm;
  std::vector<Tensor> rel_attn_bef;  // per-head relation attention (if present)
  std::vector<Tensor> rel_attn_aft;
  Tensor a_bef;       // N x 1 localizer maps
  Tensor a_aft;
  LocalFeatures local;
  Tensor skel_probs;    // rank-1 K (SSP only)
  Tensor skel_feature;  // rank-1 M; zeros when the variant has no SSP
};

Forward model_forward(const ModelState& model, const Mat& grid_bef, const Mat& grid_aft);

// Checkpoint = versioned container of named tensors + JSON snapshot.
// `extra` tensors (e.g. optimizer moments) ride along under their own names.
void save_checkpoint(const std::string& path, const ModelState& model,
                     const std::string& config_json,
                     const std::vector<std::pair<std::string, Mat>>& extra = {});

struct LoadedCheckpoint {
  ModelState model;
  std::string config_json;
  std::vector<std::pair<std::string, Mat>> extra;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace changecap
