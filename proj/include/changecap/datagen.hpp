#pragma once

#include "changecap/rng.hpp"
#include "changecap/types.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace changecap {

// Closed attribute vocabularies of the ChangeGrid corpus.
inline const std::array<std::string, 6> kColors = {"red",    "blue", "green",
                                                   "yellow", "purple", "cyan"};
inline const std::array<std::string, 4> kObjShapes = {"cube", "sphere", "cylinder", "cone"};
inline const std::array<std::string, 2> kMaterials = {"rubber", "metal"};
inline const std::array<std::string, 2> kSizes = {"small", "large"};

struct Cell {
  int row = 0;
  int col = 0;
  bool operator==(const Cell&) const = default;
  auto operator<=>(const Cell&) const = default;
};

struct SceneObject {
  int color = 0;     // index into kColors
  int shape = 0;     // index into kObjShapes
  int material = 0;  // index into kMaterials
  int size = 0;      // index into kSizes
  Cell cell;
};

enum class ChangeKind { Color, Texture, Add, Drop, Move, Distractor };
inline constexpr int kNumChangeKinds = 6;

const std::string& change_kind_name(ChangeKind k);
std::optional<ChangeKind> change_kind_from_name(const std::string& s);

struct ChangeRecord {
  ChangeKind kind = ChangeKind::Distractor;
  std::optional<SceneObject> target_before;  // state of the target in the before scene
  std::optional<SceneObject> target_after;   // state in the after scene
  // Scene-coordinate cells whose noiseless encodings differ; empty for Distractor.
  std::vector<Cell> cells_before;
  std::vector<Cell> cells_after;
};

struct GenConfig {
  int height = 8;
  int width = 8;
  int feature_channels = 48;  // C_in
  int min_objects = 5;
  int max_objects = 8;
  Real distractor_prob = 1.0 / 6.0;
  Real noise_sigma = 0.01;       // illumination noise on the after encoding
  bool viewpoint_jitter = true;  // global +-1 cell translation of the after encoding
  // Fraction of pairs whose after encoding is translated by a nonzero offset
  // (uniform over the eight {-1,0,1}^2 \ {0} offsets).
  Real jitter_prob = 0.05;
  // Empty cells carry background_scale times the drawn background code. Object
  // cells must dominate the plain-sum pooling downstream, so this stays small.
  Real background_scale = 0.0;
  std::uint64_t codebook_seed = 0x5EEDC0DEull;

  int cells() const { return height * width; }
};

struct ScenePair {
  std::uint64_t seed = 0;
  std::vector<SceneObject> before;
  std::vector<SceneObject> after;
  ChangeRecord change;
  std::pair<int, int> jitter = {0, 0};  // applied to the after encoding only
  std::vector<std::string> caption;     // tokens, no BOS/EOS
  std::vector<int> skeletons;           // sorted indices into the skeleton vocabulary
};

// Caption vocabulary of the template grammar, in a fixed id order.
class Vocabulary {
 public:
  Vocabulary();
  static const Vocabulary& instance();

  int size() const { return static_cast<int>(tokens_.size()); }
  int id(const std::string& token) const;               // throws on unknown token
  std::optional<int> find(const std::string& token) const;
  const std::string& token(int id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  int bos() const { return bos_; }
  int eos() const { return eos_; }
  int pad() const { return pad_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> index_;
  int bos_ = 0, eos_ = 0, pad_ = 0;
};

// Content words (attribute adjectives/nouns, location nouns, change verbs).
class SkeletonVocab {
 public:
  SkeletonVocab();
  static const SkeletonVocab& instance();

  int size() const { return static_cast<int>(words_.size()); }
  std::optional<int> find(const std::string& token) const;
  const std::string& word(int id) const { return words_[static_cast<std::size_t>(id)]; }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::map<std::string, int> index_;
};

// Coarse 3x3 location phrase for a grid cell ("top-left" .. "bottom-right").
std::string location_token(Cell cell, const GenConfig& cfg);

ScenePair generate_pair(std::uint64_t seed, const GenConfig& cfg);

// N x C_in feature grid. Objects contribute the sum of their attribute codes at
// their (jittered, clipped) cell; empty cells carry the background code;
// Gaussian noise with `sigma` is added from the `noise_seed` stream.
Mat encode_scene(const std::vector<SceneObject>& scene, const GenConfig& cfg,
                 std::pair<int, int> jitter, Real sigma, std::uint64_t noise_seed);

std::vector<std::string> caption_from_change(const ChangeRecord& change, const GenConfig& cfg);

// 0/1 labels over the skeleton vocabulary; throws if a caption token is not in
// the grammar vocabulary.
std::vector<int> skeleton_indices(const std::vector<std::string>& caption);
Vec skeleton_label_vector(const std::vector<int>& indices);

// Strict template parse; nullopt when no template matches.
std::optional<ChangeKind> kind_from_caption(const std::vector<std::string>& caption);

// Ground-truth after-image cells in encoding coordinates (jitter applied, clipped).
std::vector<Cell> encoded_after_cells(const ScenePair& pair, const GenConfig& cfg);

struct Corpus {
  GenConfig config;
  std::uint64_t seed = 0;
  std::vector<ScenePair> pairs;
  std::vector<Mat> grids_before;
  std::vector<Mat> grids_after;
};

Corpus build_corpus(std::uint64_t seed, int n_pairs, const GenConfig& cfg);

// meta.jsonl (header line + one record per pair) plus grids.bin (tensor wire
// format, two grids per pair in pair order).
void write_corpus(const Corpus& corpus, const std::string& dir);
Corpus read_corpus(const std::string& dir);

}  // namespace changecap
