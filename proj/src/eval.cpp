#include "udh/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "udh/adam.hpp"
#include "udh/batch.hpp"
#include "udh/error.hpp"
#include "udh/pipeline.hpp"

namespace udh {

double fourpt_rmse(const FourPointDelta& pred, const FourPointDelta& truth, RmseConvention convention) {
  const double sq = (pred.d - truth.d).squaredNorm();
  return std::sqrt(sq / (convention == RmseConvention::PerCoordinate ? 8.0 : 4.0));
}

double nearest_rank_percentile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::EmptySplit, "percentile of an empty list");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(p / 100.0 * n)));
  return values[std::min(rank, values.size()) - 1];
}

EvalResult evaluate(const Estimator& estimator, std::span<const Sample* const> split,
                    RmseConvention convention) {
  if (split.empty()) throw Error(ErrorCode::EmptySplit, "evaluation split is empty");
  EvalResult r;
  double sum = 0.0;
  for (const Sample* s : split) {
    if (!s->truth) throw Error(ErrorCode::MissingGroundTruth, "evaluation samples need ground truth");
    try {
      const Estimate e = estimator(*s);
      const double v = fourpt_rmse(e.delta, *s->truth, convention);
      r.rmse.push_back(v);
      r.iterations.push_back(e.iterations);
      r.errors.emplace_back();
      sum += v;
    } catch (const Error& err) {
      r.rmse.push_back(std::numeric_limits<double>::infinity());
      r.iterations.push_back(0);
      r.errors.emplace_back(err.what());
      ++r.failures;
    }
  }
  const int ok = static_cast<int>(split.size()) - r.failures;
  r.mean = ok > 0 ? sum / ok : std::numeric_limits<double>::infinity();
  r.median = nearest_rank_percentile(r.rmse, 50.0);
  for (int p = 10; p <= 90; p += 10) r.percentiles.push_back({p, nearest_rank_percentile(r.rmse, p)});
  return r;
}

nlohmann::json summary_json(const EvalResult& r) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json("inf"); };
  nlohmann::json pct = nlohmann::json::object();
  for (const auto& e : r.percentiles) pct[std::to_string(e.percentile)] = num(e.rmse);
  return {{"count", r.rmse.size()},
          {"failures", r.failures},
          {"mean_rmse", num(r.mean)},
          {"median_rmse", num(r.median)},
          {"percentiles", pct}};
}

std::string per_sample_csv(const EvalResult& r) {
  std::ostringstream os;
  os.precision(17);
  os << "index,rmse,iterations,error\n";
  for (std::size_t i = 0; i < r.rmse.size(); ++i) {
    std::string err = r.errors[i];
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    os << i << ',' << (std::isfinite(r.rmse[i]) ? std::to_string(r.rmse[i]) : "inf") << ','
       << r.iterations[i] << ',' << err << '\n';
  }
  return os.str();
}

Estimator zero_estimator() {
  return [](const Sample&) { return Estimate{FourPointDelta::zero(), 0}; };
}

Estimator truth_estimator() {
  return [](const Sample& s) {
    if (!s.truth) throw Error(ErrorCode::MissingGroundTruth, "sample without ground truth");
    return Estimate{*s.truth, 0};
  };
}

Estimator net_estimator(RegressionNet<float>& net, double mean, double std) {
  return [&net, mean, std](const Sample& s) {
    const Sample* one[] = {&s};
    const Tensor<float> out = net.forward(make_input_batch(one, mean, std), false);
    return Estimate{delta_from_row(out, 0), 0};
  };
}

AlignResult direct_align(const Image& image_a, const CornerSet& corners_a, const Image& patch_b,
                         const AlignConfig& cfg) {
  if (cfg.iterations < 0 || !(cfg.lr > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "direct_align needs iterations >= 0 and lr > 0");
  }
  Param<double> offsets{"delta", Tensor<double>({8})};
  offsets.tensor.zero_grad();
  AdamState adam;
  adam.lr = cfg.lr;

  AlignResult r;
  r.delta = FourPointDelta::zero();
  FourPointDelta current = FourPointDelta::zero();
  PhotometricResult eval = photometric_objective(image_a, corners_a, patch_b, current, true);
  r.initial_loss = eval.loss;
  r.best_loss = eval.loss;

  for (int it = 0; it < cfg.iterations; ++it) {
    for (int i = 0; i < 8; ++i) offsets.tensor.grad[i] = eval.grad_delta(i / 2, i % 2);
    adam_step(std::span<Param<double>>(&offsets, 1), adam);
    current = FourPointDelta::from_flat(offsets.tensor.value.data());
    try {
      eval = photometric_objective(image_a, corners_a, patch_b, current, true);
    } catch (const Error& e) {
      if (!e.is_numeric()) throw;
      r.aborted = true;
      break;
    }
    r.iterations = it + 1;
    if (eval.loss < r.best_loss) {
      r.best_loss = eval.loss;
      r.delta = current;
    }
    r.best_loss_history.push_back(r.best_loss);
  }
  return r;
}

Estimator align_estimator(const AlignConfig& cfg) {
  return [cfg](const Sample& s) {
    const AlignResult r = direct_align(s.image_a, s.corners_a, s.patch_b, cfg);
    return Estimate{r.delta, r.iterations};
  };
}

SpeedResult speed_benchmark(const Estimator& estimator, std::span<const Sample* const> split) {
  if (split.empty()) throw Error(ErrorCode::EmptySplit, "benchmark split is empty");
  SpeedResult r;
  r.warmup_samples = static_cast<int>(split.size() / 10);
  r.timed_samples = static_cast<int>(split.size()) - r.warmup_samples;
  for (int i = 0; i < r.warmup_samples; ++i) {
    try {
      estimator(*split[i]);
    } catch (const Error&) {
    }
  }
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = r.warmup_samples; i < split.size(); ++i) {
    try {
      estimator(*split[i]);
    } catch (const Error&) {
    }
  }
  const double secs = std::max(
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 1e-9);
  r.samples_per_second = r.timed_samples / secs;
  return r;
}

}  // namespace udh
