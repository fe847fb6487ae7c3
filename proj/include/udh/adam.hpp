#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "udh/tensor.hpp"

namespace udh {

struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t t = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

/// One bias-corrected Adam update using each parameter's grad buffer.
/// Moment buffers are created on the first call.
template <typename T>
void adam_step(std::span<Param<T>> params, AdamState& state) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.tensor.numel(), 0.0);
      state.v.emplace_back(p.tensor.numel(), 0.0);
    }
  }
  if (state.m.size() != params.size()) {
    throw Error(ErrorCode::ShapeMismatch, "Adam state tracks a different parameter list");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& t = params[k].tensor;
    if (state.m[k].size() != t.numel() || t.grad.size() != t.numel()) {
      throw Error(ErrorCode::ShapeMismatch, "parameter '" + params[k].name +
                                                "' disagrees with its gradient or moment buffers");
    }
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& t = params[k].tensor;
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < t.numel(); ++i) {
      const double g = t.grad[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double step = state.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + state.eps);
      t.value[i] = static_cast<T>(static_cast<double>(t.value[i]) - step);
    }
  }
}

}  // namespace udh
