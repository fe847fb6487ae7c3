#pragma once

#include "udh/image.hpp"
#include "udh/tensor.hpp"

namespace udh {

template <typename T>
struct TensorLoss {
  double value = 0.0;
  Tensor<T> grad;  // d value / d pred
};

struct ImageLoss {
  double value = 0.0;
  Image grad;  // d value / d warped
};

/// Batch mean of 0.5 * ||pred - truth||^2 over N x 8 offsets.
template <typename T>
TensorLoss<T> supervised_loss(const Tensor<T>& pred, const Tensor<T>& truth) {
  if (pred.shape != truth.shape || pred.shape.size() != 2) {
    throw Error(ErrorCode::ShapeMismatch, "supervised_loss expects equal N x 8 shapes, got " +
                                              shape_to_string(pred.shape) + " and " +
                                              shape_to_string(truth.shape));
  }
  const double n = pred.shape[0];
  TensorLoss<T> out{0.0, Tensor<T>(pred.shape)};
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    const double e = static_cast<double>(pred.value[i]) - static_cast<double>(truth.value[i]);
    out.value += 0.5 * e * e;
    out.grad.value[i] = static_cast<T>(e / n);
  }
  out.value /= n;
  return out;
}

/// Mean absolute difference; subgradient 0 where the difference is exactly zero.
ImageLoss photometric_loss(const Image& warped_a, const Image& patch_b);

Image standardize(const Image& img, double mean, double std);
Image destandardize(const Image& img, double mean, double std);

}  // namespace udh
