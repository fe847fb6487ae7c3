#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "udh/datagen.hpp"

namespace udh {

inline constexpr int kDatasetFormatVersion = 1;
inline constexpr char kRecordMagic[8] = {'U', 'D', 'H', 'S', 'M', 'P', 'L', '\0'};

struct DatasetManifest {
  int format_version = kDatasetFormatVersion;
  GenConfig config;
  std::string source = "procedural";
  std::vector<int> train;
  std::vector<int> test;
  DatasetStats stats;  // over the train split
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<Sample> samples;

  std::vector<const Sample*> split(const std::string& name) const;
};

void to_json(nlohmann::json& j, const GenConfig& c);
void from_json(const nlohmann::json& j, GenConfig& c);
void to_json(nlohmann::json& j, const DatasetManifest& m);
void from_json(const nlohmann::json& j, DatasetManifest& m);

/// Generates `cfg.count` samples; the last `test_count` form the test split.
/// Sample i draws from its own stream seeded by (cfg.seed, i) and, when
/// `sources` is empty, from its own procedural image.
Dataset generate_dataset(const GenConfig& cfg, const std::vector<Image>& sources, int test_count);

// Record layout: magic[8], u32 version, u8 has_truth, then f32 arrays each
// preceded by u32 rank and u32 dims: corners (4x2), truth (4x2, if present),
// patch_a, patch_b, image_a (HxWxC).
void write_record(const std::filesystem::path& path, const Sample& s);
Sample read_record(const std::filesystem::path& path);

std::string record_name(int index);

/// Writes manifest.json plus records/NNNNNN.bin under `dir`.
void write_dataset(const std::filesystem::path& dir, const Dataset& ds);
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace udh
