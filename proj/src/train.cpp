#include "udh/train.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <spdlog/spdlog.h>

#include "udh/batch.hpp"
#include "udh/checkpoint.hpp"
#include "udh/error.hpp"
#include "udh/losses.hpp"
#include "udh/pipeline.hpp"
#include "udh/rng.hpp"

namespace udh {

TrainMode parse_train_mode(const std::string& s) {
  if (s == "supervised") return TrainMode::Supervised;
  if (s == "unsupervised") return TrainMode::Unsupervised;
  throw Error(ErrorCode::InvalidConfig, "mode must be 'supervised' or 'unsupervised', got '" + s + "'");
}

std::string to_string(TrainMode m) { return m == TrainMode::Supervised ? "supervised" : "unsupervised"; }

double default_learning_rate(TrainMode mode) { return mode == TrainMode::Supervised ? 5e-4 : 1e-4; }

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error(ErrorCode::InvalidConfig, "batch_size must be >= 1");
  if (iterations < 1) throw Error(ErrorCode::InvalidConfig, "iterations must be >= 1");
  if (!(effective_lr() > 0.0)) throw Error(ErrorCode::InvalidConfig, "learning rate must be positive");
  if (checkpoint_every < 0) throw Error(ErrorCode::InvalidConfig, "checkpoint_every must be >= 0");
  net.validate();
}

StepResult unsupervised_step(RegressionNet<float>& net, std::span<const Sample* const> batch,
                             const DatasetStats& stats, AdamState& opt) {
  const Tensor<float> pred = net.forward(make_input_batch(batch, stats.mean, stats.std), true);
  const std::size_t n = batch.size();
  std::vector<double> losses(n, 0.0);
  std::vector<Mat42> grads(n, Mat42::Zero());
  std::vector<bool> valid(n, false);
  StepResult r;
  for (std::size_t i = 0; i < n; ++i) {
    const Sample& s = *batch[i];
    try {
      const PhotometricResult pr =
          photometric_objective(s.image_a, s.corners_a, s.patch_b, delta_from_row(pred, i), true);
      losses[i] = pr.loss;
      grads[i] = pr.grad_delta;
      valid[i] = true;
    } catch (const Error& e) {
      if (!e.is_numeric()) throw;
      ++r.skipped;
      spdlog::warn("skipping sample {} of batch: {}", i, e.what());
    }
  }
  const std::size_t used = n - static_cast<std::size_t>(r.skipped);
  Tensor<float> upstream({static_cast<int>(n), 8});
  if (used > 0) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!valid[i]) continue;
      r.loss += losses[i];
      for (int k = 0; k < 8; ++k) upstream.value[i * 8 + k] = static_cast<float>(grads[i](k / 2, k % 2) / used);
    }
    r.loss /= static_cast<double>(used);
  }
  net.backward(upstream);
  adam_step(std::span<Param<float>>(net.params()), opt);
  return r;
}

StepResult supervised_step(RegressionNet<float>& net, std::span<const Sample* const> batch,
                           const DatasetStats& stats, AdamState& opt) {
  const Tensor<float> truth = truth_batch(batch);
  const Tensor<float> pred = net.forward(make_input_batch(batch, stats.mean, stats.std), true);
  const TensorLoss<float> loss = supervised_loss(pred, truth);
  net.backward(loss.grad);
  adam_step(std::span<Param<float>>(net.params()), opt);
  return {loss.value, 0};
}

TrainReport train_loop(const TrainConfig& cfg, const Dataset& dataset) {
  cfg.validate();
  const auto train = dataset.split("train");
  const auto test = dataset.split("test");
  if (train.empty()) throw Error(ErrorCode::EmptySplit, "training split is empty");
  if (cfg.net.input_size != dataset.manifest.config.patch_size) {
    throw Error(ErrorCode::InvalidConfig, "network input size " + std::to_string(cfg.net.input_size) +
                                              " does not match patch size " +
                                              std::to_string(dataset.manifest.config.patch_size));
  }
  if (cfg.mode == TrainMode::Supervised) {
    for (const Sample* s : train) {
      if (!s->truth) throw Error(ErrorCode::MissingGroundTruth, "supervised training needs ground-truth offsets");
    }
  }
  const DatasetStats stats = dataset.manifest.stats;

  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + cfg.out_dir.string() + ": " + ec.message());

  RegressionNet<float> net(cfg.net);
  net.init(mix_seed(cfg.seed, 1));
  net.set_dropout_seed(mix_seed(cfg.seed, 2));
  AdamState opt;
  opt.lr = cfg.effective_lr();
  opt.beta1 = cfg.beta1;
  opt.beta2 = cfg.beta2;
  opt.eps = cfg.eps;

  TrainReport report;
  report.log_csv = cfg.out_dir / "train_log.csv";
  report.checkpoint = cfg.out_dir / "model.ckpt";
  std::ofstream log(report.log_csv, std::ios::trunc);
  if (!log) throw Error(ErrorCode::Io, "cannot write " + report.log_csv.string());
  log << "iteration,loss,wall_ms\n";
  log.precision(10);

  CheckpointMeta meta{cfg.net, stats.mean, stats.std, 0};
  SplitMix64 shuffle_rng(mix_seed(cfg.seed, 3));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();
  std::vector<const Sample*> batch;

  const auto start = std::chrono::steady_clock::now();
  for (int it = 1; it <= cfg.iterations; ++it) {
    batch.clear();
    while (batch.size() < static_cast<std::size_t>(cfg.batch_size)) {
      if (cursor == order.size()) {
        for (std::size_t i = order.size(); i > 1; --i) {
          std::swap(order[i - 1], order[shuffle_rng.next() % i]);
        }
        cursor = 0;
      }
      batch.push_back(train[order[cursor++]]);
      if (batch.size() == train.size() && train.size() < static_cast<std::size_t>(cfg.batch_size)) break;
    }
    const StepResult step = cfg.mode == TrainMode::Unsupervised
                                ? unsupervised_step(net, batch, stats, opt)
                                : supervised_step(net, batch, stats, opt);
    report.losses.push_back(step.loss);
    report.skipped_samples += step.skipped;
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    log << it << ',' << step.loss << ',' << ms << '\n';
    if (cfg.checkpoint_every > 0 && it % cfg.checkpoint_every == 0 && it != cfg.iterations) {
      char name[32];
      std::snprintf(name, sizeof(name), "ckpt_%06d.ckpt", it);
      meta.iteration = it;
      save_checkpoint(cfg.out_dir / name, net, meta);
      report.periodic_checkpoints.push_back(cfg.out_dir / name);
    }
  }
  report.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  meta.iteration = cfg.iterations;
  save_checkpoint(report.checkpoint, net, meta);
  log.flush();
  if (!log) throw Error(ErrorCode::Io, "failed writing " + report.log_csv.string());

  // Held-out scoring needs labels; unlabeled data still trains unsupervised.
  const bool labeled = std::all_of(test.begin(), test.end(), [](const Sample* s) { return s->truth.has_value(); });
  if (!test.empty() && labeled) {
    report.eval = evaluate(net_estimator(net, stats.mean, stats.std), test);
    report.baseline = evaluate(zero_estimator(), test);
  }
  return report;
}

}  // namespace udh
