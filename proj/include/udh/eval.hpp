#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "udh/datagen.hpp"
#include "udh/geom.hpp"
#include "udh/nn.hpp"

namespace udh {

enum class RmseConvention {
  PerCoordinate,  // sqrt(sum e^2 / 8)
  PerCorner,      // sqrt(sum ||e_k||^2 / 4), sqrt(2) larger
};

double fourpt_rmse(const FourPointDelta& pred, const FourPointDelta& truth,
                   RmseConvention convention = RmseConvention::PerCoordinate);

struct Estimate {
  FourPointDelta delta;
  int iterations = 0;  // optimizer iterations, 0 for one-shot estimators
};

using Estimator = std::function<Estimate(const Sample&)>;

struct PercentileEntry {
  int percentile;
  double rmse;
};

struct EvalResult {
  std::vector<double> rmse;       // per sample; +inf for failures
  std::vector<int> iterations;    // per sample
  std::vector<std::string> errors;  // per sample; empty on success
  std::vector<PercentileEntry> percentiles;  // 10th..90th, nearest rank
  double mean = 0.0;    // over successful samples
  double median = 0.0;  // nearest-rank 50th, failures included as +inf
  int failures = 0;
};

/// Nearest-rank percentile (p in (0, 100]) of an unsorted list.
double nearest_rank_percentile(std::vector<double> values, double p);

EvalResult evaluate(const Estimator& estimator, std::span<const Sample* const> split,
                    RmseConvention convention = RmseConvention::PerCoordinate);

nlohmann::json summary_json(const EvalResult& r);
/// Per-sample CSV: index,rmse,iterations,error
std::string per_sample_csv(const EvalResult& r);

Estimator zero_estimator();
Estimator truth_estimator();

/// Runs the regressor on one sample at a time using the given standardization.
/// The network is captured by reference and must outlive the estimator.
Estimator net_estimator(RegressionNet<float>& net, double mean, double std);

struct AlignConfig {
  int iterations = 500;
  double lr = 0.05;  // Adam step size, in pixels
};

struct AlignResult {
  FourPointDelta delta;          // best-loss iterate
  double initial_loss = 0.0;     // at the zero offset
  double best_loss = 0.0;
  int iterations = 0;            // iterations actually run
  std::vector<double> best_loss_history;  // best-so-far after each iteration
  bool aborted = false;          // a DLT / projection failure stopped the run early
};

/// Network-free alignment: Adam on the eight corner offsets, starting from zero,
/// minimizing the photometric objective through the Tensor DLT and the warp.
AlignResult direct_align(const Image& image_a, const CornerSet& corners_a, const Image& patch_b,
                         const AlignConfig& cfg = {});

Estimator align_estimator(const AlignConfig& cfg = {});

struct SpeedResult {
  double samples_per_second = 0.0;
  int timed_samples = 0;
  int warmup_samples = 0;
};

/// Throughput over the split after excluding the first 10% as warmup.
SpeedResult speed_benchmark(const Estimator& estimator, std::span<const Sample* const> split);

}  // namespace udh
