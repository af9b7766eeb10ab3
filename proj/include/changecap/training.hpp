#pragma once

#include "changecap/datagen.hpp"
#include "changecap/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace changecap {

// Raised when a training step hits non-finite numerics; the CLI maps it to a
// dedicated exit code.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  Variant variant = Variant::R3NetSSP;
  Dims dims;
  Real lambda = 0.1;
  Real lr = 1e-3;
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real adam_eps = 1e-8;
  int batch_size = 32;
  int epochs = 30;
  int holdout = 200;  // trailing pairs reserved for per-epoch evaluation
  std::uint64_t seed = 1;

  std::string to_json() const;
  static TrainConfig from_json(const std::string& s);
};

// One training example: encoded grids, teacher-forcing targets (caption token
// ids followed by EOS) and the 0/1 skeleton label vector.
struct Sample {
  const Mat* grid_bef = nullptr;
  const Mat* grid_aft = nullptr;
  std::vector<Index> targets;
  Vec labels;
};

std::vector<Sample> make_samples(const Corpus& corpus);

struct AdamState {
  std::map<std::string, std::pair<Mat, Mat>> moments;  // first, second
  std::int64_t step = 0;
};

// Bias-corrected Adam over the model's active parameters, reading gradients
// accumulated on the parameter tensors. Missing gradients count as zero.
void adam_step(ModelState& model, AdamState& adam, Real lr, Real beta1 = 0.9, Real beta2 = 0.999,
               Real eps = 1e-8);

struct JointLoss {
  Tensor total;
  Tensor caption;   // batch mean of per-sequence NLL sums
  Tensor skeleton;  // batch mean of per-sample multi-label BCE; constant 0 without SSP
};

// Single-graph batch loss: total = caption + lambda * skeleton. For variants
// without SSP the skeleton branch is absent from the graph entirely.
JointLoss joint_loss(const ModelState& model, const std::vector<Sample>& batch, Real lambda);

struct TrainResult {
  ModelState model;
  AdamState adam;
  std::vector<std::string> metrics_log;  // one JSON record per epoch
};

// Shuffled mini-batch training with per-epoch held-out decoding metrics.
// Deterministic for a fixed corpus and config. `progress`, when set, receives
// the per-epoch log lines.
TrainResult train(const Corpus& corpus, const TrainConfig& cfg, std::ostream* progress = nullptr);

// Checkpoint helpers carrying optimizer state alongside the model.
void save_training_checkpoint(const std::string& path, const ModelState& model,
                              const AdamState& adam, const TrainConfig& cfg);
struct LoadedTraining {
  ModelState model;
  AdamState adam;
  TrainConfig config;
};
LoadedTraining load_training_checkpoint(const std::string& path);

}  // namespace changecap
