#include "changecap/datagen.hpp"

#include "changecap/serialize.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

namespace changecap {

namespace {

using nlohmann::json;

const std::array<std::string, kNumChangeKinds> kKindNames = {"Color", "Texture", "Add",
                                                             "Drop",  "Move",    "Distractor"};

// Verb of each change-kind template; captions are invertible through these.
const std::array<std::string, 5> kChangeVerbs = {"turned", "became", "added", "dropped", "moved"};

const std::array<std::string, 3> kRowBands = {"top", "middle", "bottom"};
const std::array<std::string, 3> kColBands = {"left", "center", "right"};

std::vector<std::string> location_tokens() {
  std::vector<std::string> out;
  for (const auto& r : kRowBands) {
    for (const auto& c : kColBands) out.push_back(r + "-" + c);
  }
  return out;
}

bool is_in(const std::string& t, const auto& list) {
  return std::find(list.begin(), list.end(), t) != list.end();
}

int clip(int v, int lo, int hi) { return std::max(lo, std::min(hi, v)); }

}  // namespace

const std::string& change_kind_name(ChangeKind k) {
  return kKindNames[static_cast<std::size_t>(k)];
}

std::optional<ChangeKind> change_kind_from_name(const std::string& s) {
  for (int i = 0; i < kNumChangeKinds; ++i) {
    if (kKindNames[static_cast<std::size_t>(i)] == s) return static_cast<ChangeKind>(i);
  }
  return std::nullopt;
}

Vocabulary::Vocabulary() {
  tokens_ = {"<bos>", "<eos>", "<pad>"};
  bos_ = 0;
  eos_ = 1;
  pad_ = 2;
  for (const char* t : {"the", "a", "was", "at", "to", "from", "no", "change", "made"}) {
    tokens_.push_back(t);
  }
  for (const auto& t : kChangeVerbs) tokens_.push_back(t);
  for (const auto& t : kColors) tokens_.push_back(t);
  for (const auto& t : kObjShapes) tokens_.push_back(t);
  for (const auto& t : kMaterials) tokens_.push_back(t);
  for (const auto& t : kSizes) tokens_.push_back(t);
  for (const auto& t : location_tokens()) tokens_.push_back(t);
  for (int i = 0; i < static_cast<int>(tokens_.size()); ++i) index_[tokens_[i]] = i;
}

const Vocabulary& Vocabulary::instance() {
  static const Vocabulary v;
  return v;
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) throw std::runtime_error("vocabulary: unknown token '" + token + "'");
  return it->second;
}

std::optional<int> Vocabulary::find(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) throw std::runtime_error("vocabulary: id out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

// Attribute nouns/adjectives and change verbs; location phrases and function
// words are not skeletons.
SkeletonVocab::SkeletonVocab() {
  for (const auto& t : kColors) words_.push_back(t);
  for (const auto& t : kObjShapes) words_.push_back(t);
  for (const auto& t : kMaterials) words_.push_back(t);
  for (const auto& t : kSizes) words_.push_back(t);
  for (const auto& t : kChangeVerbs) words_.push_back(t);
  words_.push_back("made");  // the no-change verb
  for (int i = 0; i < static_cast<int>(words_.size()); ++i) index_[words_[i]] = i;
}

const SkeletonVocab& SkeletonVocab::instance() {
  static const SkeletonVocab v;
  return v;
}

std::optional<int> SkeletonVocab::find(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string location_token(Cell cell, const GenConfig& cfg) {
  const int rb = clip(3 * cell.row / cfg.height, 0, 2);
  const int cb = clip(3 * cell.col / cfg.width, 0, 2);
  return kRowBands[static_cast<std::size_t>(rb)] + "-" + kColBands[static_cast<std::size_t>(cb)];
}

namespace {

std::vector<SceneObject> sample_scene(SplitMix64& rng, const GenConfig& cfg) {
  const int span = cfg.max_objects - cfg.min_objects + 1;
  const int count = cfg.min_objects + static_cast<int>(rng.below(static_cast<std::uint64_t>(span)));
  std::set<Cell> used;
  std::vector<SceneObject> scene;
  scene.reserve(static_cast<std::size_t>(count));
  while (static_cast<int>(scene.size()) < count) {
    const int flat = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.cells())));
    Cell cell{flat / cfg.width, flat % cfg.width};
    if (!used.insert(cell).second) continue;
    SceneObject obj;
    obj.color = static_cast<int>(rng.below(kColors.size()));
    obj.shape = static_cast<int>(rng.below(kObjShapes.size()));
    obj.material = static_cast<int>(rng.below(kMaterials.size()));
    obj.size = static_cast<int>(rng.below(kSizes.size()));
    obj.cell = cell;
    scene.push_back(obj);
  }
  return scene;
}

Cell sample_free_cell(SplitMix64& rng, const GenConfig& cfg, const std::set<Cell>& used) {
  for (;;) {
    const int flat = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.cells())));
    Cell cell{flat / cfg.width, flat % cfg.width};
    if (!used.contains(cell)) return cell;
  }
}

std::set<Cell> occupied(const std::vector<SceneObject>& scene) {
  std::set<Cell> s;
  for (const auto& o : scene) s.insert(o.cell);
  return s;
}

}  // namespace

ScenePair generate_pair(std::uint64_t seed, const GenConfig& cfg) {
  if (cfg.height < 4 || cfg.width < 4) {
    throw std::invalid_argument("generate_pair: grid must be at least 4x4");
  }
  if (cfg.min_objects < 3 || cfg.max_objects > cfg.cells() / 2 ||
      cfg.min_objects > cfg.max_objects) {
    throw std::invalid_argument("generate_pair: object count must fit [3, H*W/2]");
  }

  SplitMix64 rng(seed);
  ChangeKind kind;
  if (rng.next_real() < cfg.distractor_prob) {
    kind = ChangeKind::Distractor;
  } else {
    kind = static_cast<ChangeKind>(rng.below(5));
  }

  ScenePair pair;
  pair.seed = seed;
  pair.before = sample_scene(rng, cfg);
  pair.after = pair.before;
  pair.change.kind = kind;

  switch (kind) {
    case ChangeKind::Color: {
      const auto idx = rng.below(pair.before.size());
      SceneObject& obj = pair.after[idx];
      pair.change.target_before = pair.before[idx];
      obj.color = (obj.color + 1 + static_cast<int>(rng.below(kColors.size() - 1))) %
                  static_cast<int>(kColors.size());
      pair.change.target_after = obj;
      pair.change.cells_before = {obj.cell};
      pair.change.cells_after = {obj.cell};
      break;
    }
    case ChangeKind::Texture: {
      const auto idx = rng.below(pair.before.size());
      SceneObject& obj = pair.after[idx];
      pair.change.target_before = pair.before[idx];
      obj.material = 1 - obj.material;
      pair.change.target_after = obj;
      pair.change.cells_before = {obj.cell};
      pair.change.cells_after = {obj.cell};
      break;
    }
    case ChangeKind::Add: {
      const Cell cell = sample_free_cell(rng, cfg, occupied(pair.before));
      SceneObject obj;
      obj.color = static_cast<int>(rng.below(kColors.size()));
      obj.shape = static_cast<int>(rng.below(kObjShapes.size()));
      obj.material = static_cast<int>(rng.below(kMaterials.size()));
      obj.size = static_cast<int>(rng.below(kSizes.size()));
      obj.cell = cell;
      pair.after.push_back(obj);
      pair.change.target_after = obj;
      pair.change.cells_before = {cell};
      pair.change.cells_after = {cell};
      break;
    }
    case ChangeKind::Drop: {
      const auto idx = rng.below(pair.before.size());
      pair.change.target_before = pair.before[idx];
      pair.change.cells_before = {pair.before[idx].cell};
      pair.change.cells_after = {pair.before[idx].cell};
      pair.after.erase(pair.after.begin() + static_cast<std::ptrdiff_t>(idx));
      break;
    }
    case ChangeKind::Move: {
      const auto idx = rng.below(pair.before.size());
      const Cell from = pair.before[idx].cell;
      const Cell to = sample_free_cell(rng, cfg, occupied(pair.before));
      pair.after[idx].cell = to;
      pair.change.target_before = pair.before[idx];
      pair.change.target_after = pair.after[idx];
      pair.change.cells_before = {from, to};
      pair.change.cells_after = {from, to};
      break;
    }
    case ChangeKind::Distractor:
      break;
  }

  if (cfg.viewpoint_jitter && rng.next_real() < cfg.jitter_prob) {
    // One of the eight nonzero offsets in {-1,0,1}^2.
    const int pick = static_cast<int>(rng.below(8));
    const int with_hole = pick >= 4 ? pick + 1 : pick;  // skip (0,0) at index 4
    pair.jitter.first = with_hole / 3 - 1;
    pair.jitter.second = with_hole % 3 - 1;
  }

  pair.caption = caption_from_change(pair.change, cfg);
  pair.skeletons = skeleton_indices(pair.caption);
  return pair;
}

Mat encode_scene(const std::vector<SceneObject>& scene, const GenConfig& cfg,
                 std::pair<int, int> jitter, Real sigma, std::uint64_t noise_seed) {
  const int n = cfg.cells();
  const int c = cfg.feature_channels;

  // Fixed codebook: one code per attribute value plus the background code.
  SplitMix64 code_rng(cfg.codebook_seed);
  const auto draw_code = [&code_rng, c]() {
    Vec v(c);
    for (int i = 0; i < c; ++i) v(i) = code_rng.normal(0.0, 0.5);
    return v;
  };
  std::vector<Vec> color_codes, shape_codes, material_codes, size_codes, band_codes;
  for (std::size_t i = 0; i < kColors.size(); ++i) color_codes.push_back(draw_code());
  for (std::size_t i = 0; i < kObjShapes.size(); ++i) shape_codes.push_back(draw_code());
  for (std::size_t i = 0; i < kMaterials.size(); ++i) material_codes.push_back(draw_code());
  for (std::size_t i = 0; i < kSizes.size(); ++i) size_codes.push_back(draw_code());
  // Location bands act as a fifth attribute family: a rendered cell carries the
  // code of its 3x3 band, which is the content the location phrases are read
  // from.
  for (int i = 0; i < 9; ++i) band_codes.push_back(draw_code());
  const Vec background = cfg.background_scale * draw_code();

  Mat grid = Mat::Zero(n, c);
  std::vector<bool> filled(static_cast<std::size_t>(n), false);
  for (const SceneObject& obj : scene) {
    const int r = clip(obj.cell.row + jitter.first, 0, cfg.height - 1);
    const int cc = clip(obj.cell.col + jitter.second, 0, cfg.width - 1);
    const int at = r * cfg.width + cc;
    const int band = (3 * r / cfg.height) * 3 + (3 * cc / cfg.width);
    grid.row(at) += (color_codes[static_cast<std::size_t>(obj.color)] +
                     shape_codes[static_cast<std::size_t>(obj.shape)] +
                     material_codes[static_cast<std::size_t>(obj.material)] +
                     size_codes[static_cast<std::size_t>(obj.size)] +
                     band_codes[static_cast<std::size_t>(band)])
                        .transpose();
    filled[static_cast<std::size_t>(at)] = true;
  }
  for (int i = 0; i < n; ++i) {
    if (!filled[static_cast<std::size_t>(i)]) grid.row(i) = background.transpose();
  }

  if (sigma > 0.0) {
    SplitMix64 noise(noise_seed);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < c; ++j) grid(i, j) += noise.normal(0.0, sigma);
    }
  }
  return grid;
}

std::vector<std::string> caption_from_change(const ChangeRecord& change, const GenConfig& cfg) {
  const auto attrs = [](const SceneObject& o) {
    return std::vector<std::string>{kSizes[static_cast<std::size_t>(o.size)],
                                    kColors[static_cast<std::size_t>(o.color)],
                                    kMaterials[static_cast<std::size_t>(o.material)],
                                    kObjShapes[static_cast<std::size_t>(o.shape)]};
  };
  std::vector<std::string> out;
  switch (change.kind) {
    case ChangeKind::Color: {
      const auto a = attrs(*change.target_before);
      out = {"the", a[0], a[1], a[2], a[3], "turned",
             kColors[static_cast<std::size_t>(change.target_after->color)]};
      break;
    }
    case ChangeKind::Texture: {
      const auto a = attrs(*change.target_before);
      out = {"the", a[0], a[1], a[2], a[3], "became",
             kMaterials[static_cast<std::size_t>(change.target_after->material)]};
      break;
    }
    case ChangeKind::Add: {
      const auto a = attrs(*change.target_after);
      out = {"a",   a[0], a[1],    a[2], a[3],
             "was", "added", "at", location_token(change.target_after->cell, cfg)};
      break;
    }
    case ChangeKind::Drop: {
      const auto a = attrs(*change.target_before);
      out = {"the", a[0], a[1], a[2],  a[3],
             "at",  location_token(change.target_before->cell, cfg), "was", "dropped"};
      break;
    }
    case ChangeKind::Move: {
      const auto a = attrs(*change.target_before);
      out = {"the",  a[0],
             a[1],   a[2],
             a[3],   "moved",
             "from", location_token(change.target_before->cell, cfg),
             "to",   location_token(change.target_after->cell, cfg)};
      break;
    }
    case ChangeKind::Distractor:
      out = {"no", "change", "was", "made"};
      break;
  }
  return out;
}

std::vector<int> skeleton_indices(const std::vector<std::string>& caption) {
  const auto& vocab = Vocabulary::instance();
  const auto& skel = SkeletonVocab::instance();
  std::set<int> found;
  for (const auto& t : caption) {
    if (!vocab.find(t)) {
      throw std::runtime_error("skeleton_indices: token '" + t + "' outside the grammar");
    }
    if (auto id = skel.find(t)) found.insert(*id);
  }
  return {found.begin(), found.end()};
}

Vec skeleton_label_vector(const std::vector<int>& indices) {
  Vec y = Vec::Zero(SkeletonVocab::instance().size());
  for (int i : indices) y(i) = 1.0;
  return y;
}

std::optional<ChangeKind> kind_from_caption(const std::vector<std::string>& caption) {
  const auto is_size = [](const std::string& t) { return is_in(t, kSizes); };
  const auto is_color = [](const std::string& t) { return is_in(t, kColors); };
  const auto is_material = [](const std::string& t) { return is_in(t, kMaterials); };
  const auto is_shape = [](const std::string& t) { return is_in(t, kObjShapes); };
  const auto is_loc = [](const std::string& t) { return is_in(t, location_tokens()); };
  const auto np = [&](std::size_t i) {  // noun phrase at tokens i..i+3
    return is_size(caption[i]) && is_color(caption[i + 1]) && is_material(caption[i + 2]) &&
           is_shape(caption[i + 3]);
  };

  const std::size_t n = caption.size();
  if (n == 4 && caption == std::vector<std::string>{"no", "change", "was", "made"}) {
    return ChangeKind::Distractor;
  }
  if (n == 7 && caption[0] == "the" && np(1) && caption[5] == "turned" && is_color(caption[6])) {
    return ChangeKind::Color;
  }
  if (n == 7 && caption[0] == "the" && np(1) && caption[5] == "became" &&
      is_material(caption[6])) {
    return ChangeKind::Texture;
  }
  if (n == 9 && caption[0] == "a" && np(1) && caption[5] == "was" && caption[6] == "added" &&
      caption[7] == "at" && is_loc(caption[8])) {
    return ChangeKind::Add;
  }
  if (n == 9 && caption[0] == "the" && np(1) && caption[5] == "at" && is_loc(caption[6]) &&
      caption[7] == "was" && caption[8] == "dropped") {
    return ChangeKind::Drop;
  }
  if (n == 10 && caption[0] == "the" && np(1) && caption[5] == "moved" && caption[6] == "from" &&
      is_loc(caption[7]) && caption[8] == "to" && is_loc(caption[9])) {
    return ChangeKind::Move;
  }
  return std::nullopt;
}

std::vector<Cell> encoded_after_cells(const ScenePair& pair, const GenConfig& cfg) {
  std::vector<Cell> out;
  for (const Cell& c : pair.change.cells_after) {
    out.push_back(Cell{clip(c.row + pair.jitter.first, 0, cfg.height - 1),
                       clip(c.col + pair.jitter.second, 0, cfg.width - 1)});
  }
  return out;
}

Corpus build_corpus(std::uint64_t seed, int n_pairs, const GenConfig& cfg) {
  Corpus corpus;
  corpus.config = cfg;
  corpus.seed = seed;
  corpus.pairs.reserve(static_cast<std::size_t>(n_pairs));
  for (int i = 0; i < n_pairs; ++i) {
    const std::uint64_t pair_seed = SplitMix64::split(seed, static_cast<std::uint64_t>(i));
    ScenePair pair = generate_pair(pair_seed, cfg);
    const std::uint64_t noise_seed = SplitMix64::split(pair_seed, 0x10153);
    corpus.grids_before.push_back(encode_scene(pair.before, cfg, {0, 0}, 0.0, 0));
    corpus.grids_after.push_back(
        encode_scene(pair.after, cfg, pair.jitter, cfg.noise_sigma, noise_seed));
    corpus.pairs.push_back(std::move(pair));
  }
  return corpus;
}

namespace {

json object_to_json(const SceneObject& o) {
  return json{{"color", kColors[static_cast<std::size_t>(o.color)]},
              {"shape", kObjShapes[static_cast<std::size_t>(o.shape)]},
              {"material", kMaterials[static_cast<std::size_t>(o.material)]},
              {"size", kSizes[static_cast<std::size_t>(o.size)]},
              {"cell", {o.cell.row, o.cell.col}}};
}

SceneObject object_from_json(const json& j) {
  const auto index_of = [](const auto& list, const std::string& s) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (list[i] == s) return static_cast<int>(i);
    }
    throw std::runtime_error("corpus: unknown attribute value '" + s + "'");
  };
  SceneObject o;
  o.color = index_of(kColors, j.at("color").get<std::string>());
  o.shape = index_of(kObjShapes, j.at("shape").get<std::string>());
  o.material = index_of(kMaterials, j.at("material").get<std::string>());
  o.size = index_of(kSizes, j.at("size").get<std::string>());
  o.cell = Cell{j.at("cell")[0].get<int>(), j.at("cell")[1].get<int>()};
  return o;
}

json cells_to_json(const std::vector<Cell>& cells) {
  json a = json::array();
  for (const Cell& c : cells) a.push_back({c.row, c.col});
  return a;
}

std::vector<Cell> cells_from_json(const json& j) {
  std::vector<Cell> out;
  for (const auto& c : j) out.push_back(Cell{c[0].get<int>(), c[1].get<int>()});
  return out;
}

}  // namespace

void write_corpus(const Corpus& corpus, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const auto meta_path = std::filesystem::path(dir) / "meta.jsonl";
  const auto grids_path = std::filesystem::path(dir) / "grids.bin";

  std::ofstream meta(meta_path);
  if (!meta) throw std::runtime_error("cannot open for write: " + meta_path.string());
  json header{{"type", "header"},
              {"version", 1},
              {"height", corpus.config.height},
              {"width", corpus.config.width},
              {"feature_channels", corpus.config.feature_channels},
              {"min_objects", corpus.config.min_objects},
              {"max_objects", corpus.config.max_objects},
              {"distractor_prob", corpus.config.distractor_prob},
              {"noise_sigma", corpus.config.noise_sigma},
              {"viewpoint_jitter", corpus.config.viewpoint_jitter},
              {"jitter_prob", corpus.config.jitter_prob},
              {"background_scale", corpus.config.background_scale},
              {"codebook_seed", corpus.config.codebook_seed},
              {"corpus_seed", corpus.seed},
              {"pairs", corpus.pairs.size()},
              {"vocab", Vocabulary::instance().tokens()},
              {"skeleton_vocab", SkeletonVocab::instance().words()}};
  meta << header.dump() << '\n';

  for (std::size_t i = 0; i < corpus.pairs.size(); ++i) {
    const ScenePair& p = corpus.pairs[i];
    json before = json::array();
    for (const auto& o : p.before) before.push_back(object_to_json(o));
    json after = json::array();
    for (const auto& o : p.after) after.push_back(object_to_json(o));
    json rec{{"id", i},
             {"seed", p.seed},
             {"kind", change_kind_name(p.change.kind)},
             {"before", before},
             {"after", after},
             {"cells_before", cells_to_json(p.change.cells_before)},
             {"cells_after", cells_to_json(p.change.cells_after)},
             {"jitter", {p.jitter.first, p.jitter.second}},
             {"caption", p.caption},
             {"skeletons", p.skeletons}};
    if (p.change.target_before) rec["target_before"] = object_to_json(*p.change.target_before);
    if (p.change.target_after) rec["target_after"] = object_to_json(*p.change.target_after);
    meta << rec.dump() << '\n';
  }
  meta.close();
  if (!meta) throw std::runtime_error("write failure: " + meta_path.string());

  std::ofstream grids(grids_path, std::ios::binary);
  if (!grids) throw std::runtime_error("cannot open for write: " + grids_path.string());
  for (std::size_t i = 0; i < corpus.pairs.size(); ++i) {
    const Shape shape{corpus.grids_before[i].rows(), corpus.grids_before[i].cols()};
    write_tensor(grids, {std::to_string(i) + "/bef", shape, corpus.grids_before[i]});
    write_tensor(grids, {std::to_string(i) + "/aft", shape, corpus.grids_after[i]});
  }
  grids.close();
  if (!grids) throw std::runtime_error("write failure: " + grids_path.string());
}

Corpus read_corpus(const std::string& dir) {
  const auto meta_path = std::filesystem::path(dir) / "meta.jsonl";
  const auto grids_path = std::filesystem::path(dir) / "grids.bin";
  std::ifstream meta(meta_path);
  if (!meta) throw std::runtime_error("cannot open: " + meta_path.string());

  std::string line;
  if (!std::getline(meta, line)) throw std::runtime_error("corpus: empty metadata file");
  json header = json::parse(line);
  if (header.value("type", "") != "header") {
    throw std::runtime_error("corpus: first record is not a header");
  }

  Corpus corpus;
  corpus.config.height = header.at("height").get<int>();
  corpus.config.width = header.at("width").get<int>();
  corpus.config.feature_channels = header.at("feature_channels").get<int>();
  corpus.config.min_objects = header.at("min_objects").get<int>();
  corpus.config.max_objects = header.at("max_objects").get<int>();
  corpus.config.distractor_prob = header.at("distractor_prob").get<Real>();
  corpus.config.noise_sigma = header.at("noise_sigma").get<Real>();
  corpus.config.viewpoint_jitter = header.at("viewpoint_jitter").get<bool>();
  corpus.config.jitter_prob = header.at("jitter_prob").get<Real>();
  corpus.config.background_scale = header.at("background_scale").get<Real>();
  corpus.config.codebook_seed = header.at("codebook_seed").get<std::uint64_t>();
  corpus.seed = header.at("corpus_seed").get<std::uint64_t>();
  if (header.at("vocab").get<std::vector<std::string>>() != Vocabulary::instance().tokens()) {
    throw std::runtime_error("corpus: vocabulary does not match this build's grammar");
  }

  while (std::getline(meta, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    ScenePair p;
    p.seed = rec.at("seed").get<std::uint64_t>();
    auto kind = change_kind_from_name(rec.at("kind").get<std::string>());
    if (!kind) throw std::runtime_error("corpus: unknown change kind");
    p.change.kind = *kind;
    for (const auto& o : rec.at("before")) p.before.push_back(object_from_json(o));
    for (const auto& o : rec.at("after")) p.after.push_back(object_from_json(o));
    p.change.cells_before = cells_from_json(rec.at("cells_before"));
    p.change.cells_after = cells_from_json(rec.at("cells_after"));
    if (rec.contains("target_before")) {
      p.change.target_before = object_from_json(rec.at("target_before"));
    }
    if (rec.contains("target_after")) p.change.target_after = object_from_json(rec.at("target_after"));
    p.jitter = {rec.at("jitter")[0].get<int>(), rec.at("jitter")[1].get<int>()};
    p.caption = rec.at("caption").get<std::vector<std::string>>();
    p.skeletons = rec.at("skeletons").get<std::vector<int>>();
    corpus.pairs.push_back(std::move(p));
  }

  std::ifstream grids(grids_path, std::ios::binary);
  if (!grids) throw std::runtime_error("cannot open: " + grids_path.string());
  for (std::size_t i = 0; i < corpus.pairs.size(); ++i) {
    NamedTensor bef = read_tensor(grids);
    NamedTensor aft = read_tensor(grids);
    corpus.grids_before.push_back(std::move(bef.data));
    corpus.grids_after.push_back(std::move(aft.data));
  }
  return corpus;
}

}  // namespace changecap
