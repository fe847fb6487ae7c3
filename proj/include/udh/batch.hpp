#pragma once

#include <span>

#include "udh/datagen.hpp"
#include "udh/tensor.hpp"

namespace udh {

/// N x P x P x 2 network input: channel 0 is patch_a, channel 1 is patch_b,
/// both standardized with (mean, std).
Tensor<float> make_input_batch(std::span<const Sample* const> samples, double mean, double std);

/// N x 8 ground-truth offsets. Throws MissingGroundTruth if any sample lacks them.
Tensor<float> truth_batch(std::span<const Sample* const> samples);

FourPointDelta delta_from_row(const Tensor<float>& t, std::size_t row);

}  // namespace udh
