#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "udh/adam.hpp"
#include "udh/dataset.hpp"
#include "udh/eval.hpp"
#include "udh/nn.hpp"

namespace udh {

enum class TrainMode { Supervised, Unsupervised };

TrainMode parse_train_mode(const std::string& s);
std::string to_string(TrainMode m);

/// Learning rates used when none is given: 5e-4 supervised, 1e-4 unsupervised.
double default_learning_rate(TrainMode mode);

struct TrainConfig {
  TrainMode mode = TrainMode::Unsupervised;
  int batch_size = 128;
  double lr = 0.0;  // <= 0 selects default_learning_rate(mode)
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int iterations = 1;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  // 0: only the final checkpoint
  NetConfig net = NetConfig::vgg_default();
  std::filesystem::path out_dir = "run";

  double effective_lr() const { return lr > 0.0 ? lr : default_learning_rate(mode); }
  void validate() const;
};

struct StepResult {
  double loss = 0.0;
  int skipped = 0;  // samples dropped after a DLT / projection failure
};

/// Network -> offsets -> Tensor DLT -> warp of image_a over the patch-B window
/// -> mean L1 against patch_b; backpropagates through the sampler, the DLT and
/// the network, then takes one Adam step.
StepResult unsupervised_step(RegressionNet<float>& net, std::span<const Sample* const> batch,
                             const DatasetStats& stats, AdamState& opt);

/// Network -> offsets -> 0.5 ||pred - truth||^2 batch mean -> backward -> Adam.
StepResult supervised_step(RegressionNet<float>& net, std::span<const Sample* const> batch,
                           const DatasetStats& stats, AdamState& opt);

struct TrainReport {
  std::vector<double> losses;
  double wall_ms = 0.0;
  std::filesystem::path checkpoint;
  std::vector<std::filesystem::path> periodic_checkpoints;
  std::filesystem::path log_csv;
  int skipped_samples = 0;
  EvalResult eval;      // held-out split, network estimator
  EvalResult baseline;  // held-out split, zero-offset estimator
};

/// Seeded shuffled minibatches, periodic checkpoints, a per-iteration CSV log
/// (iteration,loss,wall_ms) and a final held-out evaluation.
TrainReport train_loop(const TrainConfig& cfg, const Dataset& dataset);

}  // namespace udh
