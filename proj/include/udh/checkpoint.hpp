#pragma once

#include <cstdint>
#include <filesystem>

#include "udh/nn.hpp"

namespace udh {

inline constexpr char kCheckpointMagic[8] = {'U', 'D', 'H', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Everything besides the weights needed to run inference from a checkpoint.
struct CheckpointMeta {
  NetConfig net;
  double mean = 0.0;  // input standardization
  double std = 1.0;
  std::int64_t iteration = 0;
};

// Layout: magic[8], u32 version, u32-prefixed JSON meta, u32 parameter count,
// then per parameter: u32-prefixed name, u8 dtype (1 = f32, 2 = f64),
// u32 rank, u32 dims, little-endian payload.
template <typename T>
void save_checkpoint(const std::filesystem::path& path, const RegressionNet<T>& net,
                     const CheckpointMeta& meta);

/// Rebuilds the network from the stored config and checks every record against it.
template <typename T>
RegressionNet<T> load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta = nullptr);

}  // namespace udh
