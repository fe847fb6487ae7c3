#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "udh/error.hpp"

namespace udh {

using Shape = std::vector<int>;

inline std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
}

std::string shape_to_string(const Shape& shape);

/// Dense array with a value buffer and an optional gradient buffer of the same shape.
template <typename T>
struct Tensor {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty when no gradient has been attached

  Tensor() = default;
  explicit Tensor(Shape s, T fill = T{0}) : shape(std::move(s)), value(shape_numel(shape), fill) {}

  std::size_t numel() const { return value.size(); }
  bool has_grad() const { return !grad.empty(); }

  void zero_grad() { grad.assign(value.size(), T{0}); }

  void check_invariants() const {
    if (value.size() != shape_numel(shape) || (has_grad() && grad.size() != value.size())) {
      throw Error(ErrorCode::ShapeMismatch, "tensor buffers disagree with shape " + shape_to_string(shape));
    }
  }
};

/// A named trainable tensor.
template <typename T>
struct Param {
  std::string name;
  Tensor<T> tensor;
};

}  // namespace udh
