#include "changecap/datagen.hpp"
#include "changecap/evaluate.hpp"
#include "changecap/model.hpp"
#include "changecap/serialize.hpp"
#include "changecap/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

namespace {

using changecap::Real;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string default_data_dir() {
  const char* env = std::getenv("CHANGECAP_DATA");
  return env ? env : "data";
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void write_manifest(const std::string& path, const std::string& command, const json& config,
                    std::uint64_t seed, const std::string& corpus_dir,
                    const std::string& checkpoint, double wall_clock) {
  json manifest{{"command", command},
                {"config", config},
                {"seed", seed},
                {"checkpoint", checkpoint},
                {"wall_clock_seconds", wall_clock},
                {"artifact_versions", {{"corpus_format", 1}, {"checkpoint_format", 1}}}};
  if (!corpus_dir.empty()) {
    json hashes;
    for (const char* f : {"meta.jsonl", "grids.bin"}) {
      const auto p = std::filesystem::path(corpus_dir) / f;
      if (std::filesystem::exists(p)) {
        char buf[19];
        std::snprintf(buf, sizeof(buf), "0x%016llx",
                      static_cast<unsigned long long>(changecap::hash_file(p.string())));
        hashes[f] = buf;
      }
    }
    manifest["corpus_hash"] = hashes;
  }
  std::ofstream os(path);
  if (!os) throw DataError("cannot write manifest: " + path);
  os << manifest.dump(2) << '\n';
}

changecap::Corpus load_corpus_or_throw(const std::string& dir) {
  try {
    return changecap::read_corpus(dir);
  } catch (const std::exception& e) {
    throw DataError(std::string("corpus error: ") + e.what());
  }
}

changecap::LoadedTraining load_checkpoint_or_throw(const std::string& path) {
  try {
    return changecap::load_training_checkpoint(path);
  } catch (const std::exception& e) {
    throw DataError(std::string("checkpoint error: ") + e.what());
  }
}

json grid_json(const changecap::Mat& column, changecap::Index h, changecap::Index w) {
  json rows = json::array();
  for (changecap::Index r = 0; r < h; ++r) {
    json row = json::array();
    for (changecap::Index c = 0; c < w; ++c) row.push_back(column(r * w + c, 0));
    rows.push_back(row);
  }
  return rows;
}

json attention_dump(const changecap::ModelState& model, const changecap::Forward& f) {
  const auto h = model.dims.grid_h;
  const auto w = model.dims.grid_w;
  json out;
  out["a_bef"] = grid_json(f.a_bef.value(), h, w);
  out["a_aft"] = grid_json(f.a_aft.value(), h, w);
  if (f.rrm) {
    // Channel mean of the response signals per direction, as an H x W grid.
    const changecap::Mat ab = f.rrm->alpha_bef.value().rowwise().mean();
    const changecap::Mat aa = f.rrm->alpha_aft.value().rowwise().mean();
    out["alpha_bef"] = grid_json(ab, h, w);
    out["alpha_aft"] = grid_json(aa, h, w);
  }
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"changecap: synthetic change-captioning corpus, training and evaluation"};
  app.require_subcommand(1);

  // ---- generate ----
  auto* gen = app.add_subcommand("generate", "write a deterministic corpus");
  int gen_pairs = 2200;
  std::uint64_t gen_seed = 7;
  std::string gen_out = default_data_dir();
  changecap::GenConfig gen_cfg;
  gen->add_option("--pairs", gen_pairs, "number of scene pairs");
  gen->add_option("--seed", gen_seed, "corpus seed");
  gen->add_option("--out", gen_out, "output directory");
  gen->add_option("--distractor-prob", gen_cfg.distractor_prob, "probability of a Distractor pair");
  gen->add_option("--noise-sigma", gen_cfg.noise_sigma, "illumination noise sigma (after image)");
  gen->add_option("--background-scale", gen_cfg.background_scale,
                  "magnitude of the empty-cell background code");
  gen->add_option("--jitter-prob", gen_cfg.jitter_prob,
                  "fraction of pairs with a nonzero viewpoint translation");
  gen->add_option("--height", gen_cfg.height, "grid height");
  gen->add_option("--width", gen_cfg.width, "grid width");
  gen->add_option("--channels", gen_cfg.feature_channels, "encoded feature channels");
  gen->add_option("--min-objects", gen_cfg.min_objects, "minimum objects per scene");
  gen->add_option("--max-objects", gen_cfg.max_objects, "maximum objects per scene");
  bool gen_no_jitter = false;
  gen->add_flag("--no-jitter", gen_no_jitter, "disable viewpoint jitter");

  // ---- train ----
  auto* tr = app.add_subcommand("train", "train a model on a corpus");
  std::string tr_corpus = default_data_dir();
  std::string tr_out = "model.ckpt";
  std::string tr_metrics = "";
  std::string tr_config_file = "";
  std::string tr_variant = "r3net-ssp";
  changecap::TrainConfig tr_cfg;
  tr->add_option("--corpus", tr_corpus, "corpus directory");
  tr->add_option("--out", tr_out, "checkpoint output path");
  tr->add_option("--metrics-log", tr_metrics, "metrics JSONL path (default: <out>.metrics.jsonl)");
  tr->add_option("--config", tr_config_file, "JSON training config (flags override)");
  tr->add_option("--variant", tr_variant, "baseline | rrm | r3net | r3net-ssp");
  tr->add_option("--lambda", tr_cfg.lambda, "skeleton loss weight");
  tr->add_option("--lr", tr_cfg.lr, "Adam learning rate");
  tr->add_option("--batch", tr_cfg.batch_size, "mini-batch size");
  tr->add_option("--epochs", tr_cfg.epochs, "training epochs");
  tr->add_option("--holdout", tr_cfg.holdout, "trailing pairs held out for evaluation");
  tr->add_option("--seed", tr_cfg.seed, "initialization/shuffle seed");
  tr->add_option("--proj-channels", tr_cfg.dims.c, "projected feature width");
  tr->add_option("--hidden", tr_cfg.dims.h_c, "LSTM hidden size (both LSTMs, SSP inner width)");

  // ---- eval ----
  auto* ev = app.add_subcommand("eval", "score a checkpoint on a corpus");
  std::string ev_corpus = default_data_dir();
  std::string ev_ckpt = "model.ckpt";
  std::string ev_out = "report.json";
  int ev_holdout = 0;
  ev->add_option("--corpus", ev_corpus, "corpus directory");
  ev->add_option("--checkpoint", ev_ckpt, "checkpoint path");
  ev->add_option("--out", ev_out, "report output path");
  ev->add_option("--holdout", ev_holdout, "score only the trailing N pairs (0 = all)");

  // ---- caption ----
  auto* cap = app.add_subcommand("caption", "caption one pair");
  std::string cap_corpus = default_data_dir();
  std::string cap_ckpt = "model.ckpt";
  int cap_index = -1;
  std::int64_t cap_seed = -1;
  std::string cap_dump = "";
  cap->add_option("--corpus", cap_corpus, "corpus directory");
  cap->add_option("--checkpoint", cap_ckpt, "checkpoint path");
  cap->add_option("--index", cap_index, "pair index within the corpus");
  cap->add_option("--seed", cap_seed, "generate a fresh pair from this seed instead");
  cap->add_option("--dump-attention", cap_dump, "also write attention JSON here");

  // ---- dump-attention ----
  auto* da = app.add_subcommand("dump-attention", "export attention maps for one pair");
  std::string da_corpus = default_data_dir();
  std::string da_ckpt = "model.ckpt";
  int da_index = 0;
  std::string da_out = "attention.json";
  da->add_option("--corpus", da_corpus, "corpus directory");
  da->add_option("--checkpoint", da_ckpt, "checkpoint path");
  da->add_option("--index", da_index, "pair index within the corpus");
  da->add_option("--out", da_out, "output JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // help text, exit 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (gen->parsed()) {
    Stopwatch clock;
    gen_cfg.viewpoint_jitter = !gen_no_jitter;
    if (gen_pairs < 1) throw DataError("generate: --pairs must be positive");
    changecap::Corpus corpus = changecap::build_corpus(gen_seed, gen_pairs, gen_cfg);
    try {
      changecap::write_corpus(corpus, gen_out);
    } catch (const std::exception& e) {
      throw DataError(e.what());
    }

    std::map<std::string, int> kind_counts;
    for (const auto& p : corpus.pairs) kind_counts[change_kind_name(p.change.kind)] += 1;
    json stats{{"pairs", gen_pairs},
               {"vocab_size", changecap::Vocabulary::instance().size()},
               {"skeleton_vocab_size", changecap::SkeletonVocab::instance().size()},
               {"kind_counts", kind_counts}};
    std::cout << stats.dump(2) << std::endl;

    json cfg{{"pairs", gen_pairs},
             {"out", gen_out},
             {"height", gen_cfg.height},
             {"width", gen_cfg.width},
             {"channels", gen_cfg.feature_channels},
             {"distractor_prob", gen_cfg.distractor_prob},
             {"noise_sigma", gen_cfg.noise_sigma},
             {"viewpoint_jitter", gen_cfg.viewpoint_jitter},
             {"min_objects", gen_cfg.min_objects},
             {"max_objects", gen_cfg.max_objects}};
    write_manifest((std::filesystem::path(gen_out) / "manifest.json").string(), "generate", cfg,
                   gen_seed, gen_out, "", clock.seconds());
    return kExitOk;
  }

  if (tr->parsed()) {
    Stopwatch clock;
    if (!tr_config_file.empty()) {
      std::ifstream is(tr_config_file);
      if (!is) throw DataError("cannot open config: " + tr_config_file);
      std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
      changecap::TrainConfig from_file = changecap::TrainConfig::from_json(text);
      // Flags given on the command line override the file.
      if (!tr->count("--variant")) tr_variant = variant_name(from_file.variant);
      if (!tr->count("--lambda")) tr_cfg.lambda = from_file.lambda;
      if (!tr->count("--lr")) tr_cfg.lr = from_file.lr;
      if (!tr->count("--batch")) tr_cfg.batch_size = from_file.batch_size;
      if (!tr->count("--epochs")) tr_cfg.epochs = from_file.epochs;
      if (!tr->count("--holdout")) tr_cfg.holdout = from_file.holdout;
      if (!tr->count("--seed")) tr_cfg.seed = from_file.seed;
      if (!tr->count("--proj-channels")) tr_cfg.dims = from_file.dims;
    }
    auto variant = changecap::variant_from_name(tr_variant);
    if (!variant) {
      std::cerr << "unknown variant '" << tr_variant << "'" << std::endl;
      return kExitUsage;
    }
    tr_cfg.variant = *variant;

    changecap::Corpus corpus = load_corpus_or_throw(tr_corpus);
    tr_cfg.dims.grid_h = corpus.config.height;
    tr_cfg.dims.grid_w = corpus.config.width;
    tr_cfg.dims.c_in = corpus.config.feature_channels;
    tr_cfg.dims.k = changecap::SkeletonVocab::instance().size();
    tr_cfg.dims.vocab = changecap::Vocabulary::instance().size();
    tr_cfg.dims.h_a = tr_cfg.dims.h_c;
    tr_cfg.dims.d_g = tr_cfg.dims.h_c;
    tr_cfg.dims.c_mid = tr_cfg.dims.c;

    changecap::TrainResult result = changecap::train(corpus, tr_cfg, &std::cout);
    changecap::save_training_checkpoint(tr_out, result.model, result.adam, tr_cfg);

    const std::string metrics_path = tr_metrics.empty() ? tr_out + ".metrics.jsonl" : tr_metrics;
    std::ofstream ms(metrics_path);
    if (!ms) throw DataError("cannot write metrics log: " + metrics_path);
    for (const auto& line : result.metrics_log) ms << line << '\n';

    write_manifest(tr_out + ".manifest.json", "train", json::parse(tr_cfg.to_json()), tr_cfg.seed,
                   tr_corpus, tr_out, clock.seconds());
    return kExitOk;
  }

  if (ev->parsed()) {
    Stopwatch clock;
    changecap::Corpus corpus = load_corpus_or_throw(ev_corpus);
    changecap::LoadedTraining ckpt = load_checkpoint_or_throw(ev_ckpt);
    std::vector<int> indices;
    if (ev_holdout > 0) {
      if (ev_holdout > static_cast<int>(corpus.pairs.size())) {
        throw DataError("eval: --holdout exceeds corpus size");
      }
      for (int i = static_cast<int>(corpus.pairs.size()) - ev_holdout;
           i < static_cast<int>(corpus.pairs.size()); ++i) {
        indices.push_back(i);
      }
    }
    changecap::EvalReport report;
    try {
      report = changecap::evaluate_model(ckpt.model, corpus, indices);
    } catch (const std::invalid_argument& e) {
      throw DataError(e.what());
    }
    std::ofstream os(ev_out);
    if (!os) throw DataError("cannot write report: " + ev_out);
    os << report.to_json() << '\n';
    std::cout << report.to_json() << std::endl;
    write_manifest(ev_out + ".manifest.json", "eval", json{{"holdout", ev_holdout}},
                   ckpt.config.seed, ev_corpus, ev_ckpt, clock.seconds());
    return kExitOk;
  }

  if (cap->parsed()) {
    Stopwatch clock;
    changecap::Corpus corpus = load_corpus_or_throw(cap_corpus);
    changecap::LoadedTraining ckpt = load_checkpoint_or_throw(cap_ckpt);

    changecap::Mat grid_bef, grid_aft;
    const changecap::ScenePair* pair = nullptr;
    changecap::ScenePair fresh;
    if (cap_seed >= 0) {
      fresh = changecap::generate_pair(static_cast<std::uint64_t>(cap_seed), corpus.config);
      const std::uint64_t noise_seed =
          changecap::SplitMix64::split(static_cast<std::uint64_t>(cap_seed), 0x10153);
      grid_bef = changecap::encode_scene(fresh.before, corpus.config, {0, 0}, 0.0, 0);
      grid_aft = changecap::encode_scene(fresh.after, corpus.config, fresh.jitter,
                                         corpus.config.noise_sigma, noise_seed);
      pair = &fresh;
    } else {
      if (cap_index < 0 || cap_index >= static_cast<int>(corpus.pairs.size())) {
        throw DataError("caption: --index out of range (or pass --seed)");
      }
      grid_bef = corpus.grids_before[static_cast<std::size_t>(cap_index)];
      grid_aft = corpus.grids_after[static_cast<std::size_t>(cap_index)];
      pair = &corpus.pairs[static_cast<std::size_t>(cap_index)];
    }

    changecap::NoGradGuard ng;
    changecap::Forward f = changecap::model_forward(ckpt.model, grid_bef, grid_aft);
    const auto& vocab = changecap::Vocabulary::instance();
    const auto ids = changecap::greedy_decode(f.local, f.skel_feature, ckpt.model.decoder,
                                              vocab.bos(), vocab.eos(), ckpt.model.dims.max_len);
    const auto tokens = changecap::ids_to_tokens(ids);

    json out;
    std::string text;
    for (std::size_t i = 0; i < tokens.size(); ++i) text += (i ? " " : "") + tokens[i];
    out["caption"] = text;
    out["reference"] = pair->caption;
    out["kind"] = change_kind_name(pair->change.kind);
    if (ckpt.model.has_ssp()) {
      const auto& skel = changecap::SkeletonVocab::instance();
      const changecap::Mat& probs = f.skel_probs.value();
      std::vector<std::pair<Real, int>> ranked;
      for (int k = 0; k < skel.size(); ++k) ranked.emplace_back(probs(0, k), k);
      std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
      });
      json top = json::array();
      for (int i = 0; i < 10 && i < static_cast<int>(ranked.size()); ++i) {
        top.push_back({{"skeleton", skel.word(ranked[static_cast<std::size_t>(i)].second)},
                       {"score", ranked[static_cast<std::size_t>(i)].first}});
      }
      out["skeleton_top10"] = top;
    }
    std::cout << out.dump(2) << std::endl;

    if (!cap_dump.empty()) {
      std::ofstream os(cap_dump);
      if (!os) throw DataError("cannot write attention dump: " + cap_dump);
      os << attention_dump(ckpt.model, f).dump(2) << '\n';
    }
    write_manifest("caption-manifest.json", "caption",
                   json{{"index", cap_index}, {"seed", cap_seed}}, ckpt.config.seed, cap_corpus,
                   cap_ckpt, clock.seconds());
    return kExitOk;
  }

  if (da->parsed()) {
    Stopwatch clock;
    changecap::Corpus corpus = load_corpus_or_throw(da_corpus);
    changecap::LoadedTraining ckpt = load_checkpoint_or_throw(da_ckpt);
    if (da_index < 0 || da_index >= static_cast<int>(corpus.pairs.size())) {
      throw DataError("dump-attention: --index out of range");
    }
    changecap::NoGradGuard ng;
    changecap::Forward f =
        changecap::model_forward(ckpt.model, corpus.grids_before[static_cast<std::size_t>(da_index)],
                                 corpus.grids_after[static_cast<std::size_t>(da_index)]);
    json out = attention_dump(ckpt.model, f);
    out["index"] = da_index;
    out["kind"] = change_kind_name(corpus.pairs[static_cast<std::size_t>(da_index)].change.kind);
    std::ofstream os(da_out);
    if (!os) throw DataError("cannot write: " + da_out);
    os << out.dump(2) << '\n';
    write_manifest(da_out + ".manifest.json", "dump-attention", json{{"index", da_index}},
                   ckpt.config.seed, da_corpus, da_ckpt, clock.seconds());
    return kExitOk;
  }

  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << std::endl;
    return kExitData;
  } catch (const changecap::NumericError& e) {
    std::cerr << "numeric abort: " << e.what() << std::endl;
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitData;
  }
}
