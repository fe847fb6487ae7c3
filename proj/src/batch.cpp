#include "udh/batch.hpp"

#include <string>

#include "udh/error.hpp"

namespace udh {

Tensor<float> make_input_batch(std::span<const Sample* const> samples, double mean, double std) {
  if (!(std > 1e-8)) throw Error(ErrorCode::DegenerateStd, "standard deviation must exceed 1e-8");
  if (samples.empty()) throw Error(ErrorCode::EmptyDataset, "empty batch");
  const int p = samples.front()->patch_a.height();
  Tensor<float> t({static_cast<int>(samples.size()), p, p, 2});
  std::size_t o = 0;
  for (const Sample* s : samples) {
    if (s->patch_a.height() != p || s->patch_a.width() != p || !s->patch_a.same_shape(s->patch_b) ||
        s->patch_a.channels() != 1) {
      throw Error(ErrorCode::ShapeMismatch, "batch patches must be single-channel " + std::to_string(p) +
                                                " x " + std::to_string(p));
    }
    const auto a = s->patch_a.values();
    const auto b = s->patch_b.values();
    for (std::size_t i = 0; i < a.size(); ++i) {
      t.value[o++] = static_cast<float>((a[i] - mean) / std);
      t.value[o++] = static_cast<float>((b[i] - mean) / std);
    }
  }
  return t;
}

Tensor<float> truth_batch(std::span<const Sample* const> samples) {
  Tensor<float> t({static_cast<int>(samples.size()), 8});
  for (std::size_t n = 0; n < samples.size(); ++n) {
    if (!samples[n]->truth) throw Error(ErrorCode::MissingGroundTruth, "sample without ground-truth offsets");
    for (int i = 0; i < 8; ++i) t.value[n * 8 + i] = static_cast<float>(samples[n]->truth->d(i / 2, i % 2));
  }
  return t;
}

FourPointDelta delta_from_row(const Tensor<float>& t, std::size_t row) {
  FourPointDelta d;
  for (int i = 0; i < 8; ++i) d.d(i / 2, i % 2) = t.value[row * 8 + i];
  return d;
}

}  // namespace udh
