#include "udh/dataset.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "udh/binary_io.hpp"
#include "udh/error.hpp"
#include "udh/tensor.hpp"

namespace udh {

namespace {

constexpr std::uint32_t kRecordVersion = 1;
constexpr std::uint32_t kMaxDim = 1u << 16;

void put_array(BinaryWriter& w, const Shape& shape, const std::vector<double>& values) {
  w.u32(static_cast<std::uint32_t>(shape.size()));
  for (int d : shape) w.u32(static_cast<std::uint32_t>(d));
  for (double v : values) w.f32(static_cast<float>(v));
}

std::vector<double> get_array(BinaryReader& r, const Shape& expected_rank_dims, Shape& shape) {
  const std::uint32_t rank = r.u32();
  if (rank != expected_rank_dims.size()) {
    throw Error(ErrorCode::Format, "unexpected array rank in " + r.source());
  }
  shape.assign(rank, 0);
  for (std::uint32_t i = 0; i < rank; ++i) {
    const std::uint32_t d = r.u32();
    if (d == 0 || d > kMaxDim) throw Error(ErrorCode::Format, "array dimension out of range in " + r.source());
    if (expected_rank_dims[i] > 0 && static_cast<int>(d) != expected_rank_dims[i]) {
      throw Error(ErrorCode::Format, "unexpected array dimension in " + r.source());
    }
    shape[i] = static_cast<int>(d);
  }
  std::vector<double> out(shape_numel(shape));
  for (double& v : out) v = r.f32();
  return out;
}

void put_image(BinaryWriter& w, const Image& img) {
  put_array(w, {img.height(), img.width(), img.channels()},
            std::vector<double>(img.values().begin(), img.values().end()));
}

Image get_image(BinaryReader& r) {
  Shape shape;
  const auto values = get_array(r, {0, 0, 0}, shape);
  Image img(shape[0], shape[1], shape[2]);
  std::copy(values.begin(), values.end(), img.values().begin());
  return img;
}

std::vector<double> flatten(const Mat42& m) {
  std::vector<double> out(8);
  for (int i = 0; i < 8; ++i) out[i] = m(i / 2, i % 2);
  return out;
}

}  // namespace

std::vector<const Sample*> Dataset::split(const std::string& name) const {
  const std::vector<int>* ids = nullptr;
  if (name == "train") {
    ids = &manifest.train;
  } else if (name == "test") {
    ids = &manifest.test;
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown split '" + name + "'");
  }
  std::vector<const Sample*> out;
  out.reserve(ids->size());
  for (int i : *ids) {
    if (i < 0 || static_cast<std::size_t>(i) >= samples.size()) {
      throw Error(ErrorCode::Format, "split '" + name + "' references missing sample " + std::to_string(i));
    }
    out.push_back(&samples[i]);
  }
  return out;
}

void to_json(nlohmann::json& j, const GenConfig& c) {
  j = {{"patch_size", c.patch_size},
       {"rho", c.rho},
       {"seed", c.seed},
       {"count", c.count},
       {"augment",
        {{"enabled", c.augment.enabled},
         {"brightness_max", c.augment.brightness_max},
         {"gamma_lo", c.augment.gamma_lo},
         {"gamma_hi", c.augment.gamma_hi}}}};
}

void from_json(const nlohmann::json& j, GenConfig& c) {
  c.patch_size = j.at("patch_size").get<int>();
  c.rho = j.at("rho").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.count = j.at("count").get<int>();
  const auto& a = j.at("augment");
  c.augment.enabled = a.at("enabled").get<bool>();
  c.augment.brightness_max = a.at("brightness_max").get<double>();
  c.augment.gamma_lo = a.at("gamma_lo").get<double>();
  c.augment.gamma_hi = a.at("gamma_hi").get<double>();
}

void to_json(nlohmann::json& j, const DatasetManifest& m) {
  std::vector<std::string> records;
  for (int i = 0; i < m.config.count; ++i) records.push_back(record_name(i));
  j = {{"format_version", m.format_version},
       {"config", m.config},
       {"source", m.source},
       {"splits", {{"train", m.train}, {"test", m.test}}},
       {"stats", {{"mean", m.stats.mean}, {"std", m.stats.std}}},
       {"records", records}};
}

void from_json(const nlohmann::json& j, DatasetManifest& m) {
  m.format_version = j.at("format_version").get<int>();
  m.config = j.at("config").get<GenConfig>();
  m.source = j.at("source").get<std::string>();
  m.train = j.at("splits").at("train").get<std::vector<int>>();
  m.test = j.at("splits").at("test").get<std::vector<int>>();
  m.stats.mean = j.at("stats").at("mean").get<double>();
  m.stats.std = j.at("stats").at("std").get<double>();
}

Dataset generate_dataset(const GenConfig& cfg, const std::vector<Image>& sources, int test_count) {
  cfg.validate();
  if (cfg.count < 1) throw Error(ErrorCode::InvalidConfig, "count must be at least 1");
  if (test_count < 0 || test_count >= cfg.count) {
    throw Error(ErrorCode::InvalidConfig, "test split must leave at least one training sample");
  }
  Dataset ds;
  ds.manifest.config = cfg;
  ds.manifest.source = sources.empty() ? "procedural" : "images";
  ds.samples.reserve(cfg.count);
  const ProceduralConfig pcfg = procedural_for(cfg);
  for (int i = 0; i < cfg.count; ++i) {
    SplitMix64 rng(mix_seed(cfg.seed, i));
    Sample s;
    if (sources.empty()) {
      s = generate_sample(procedural_image(pcfg, mix_seed(cfg.seed, i, 0x1a6e)), cfg, rng);
    } else {
      s = generate_sample(sources[static_cast<std::size_t>(i) % sources.size()], cfg, rng);
    }
    if (cfg.augment.enabled) s = augment_illumination(s, cfg.augment, rng);
    ds.samples.push_back(std::move(s));
  }
  const int train_count = cfg.count - test_count;
  for (int i = 0; i < cfg.count; ++i) (i < train_count ? ds.manifest.train : ds.manifest.test).push_back(i);
  std::vector<Sample> train(ds.samples.begin(), ds.samples.begin() + train_count);
  ds.manifest.stats = dataset_stats(train);
  return ds;
}

std::string record_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "records/%06d.bin", index);
  return buf;
}

void write_record(const std::filesystem::path& path, const Sample& s) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  BinaryWriter w(os);
  w.bytes(kRecordMagic, sizeof(kRecordMagic));
  w.u32(kRecordVersion);
  w.u8(s.truth ? 1 : 0);
  std::vector<double> corners;
  for (const auto& p : s.corners_a.pts) {
    corners.push_back(p.x());
    corners.push_back(p.y());
  }
  put_array(w, {4, 2}, corners);
  if (s.truth) put_array(w, {4, 2}, flatten(s.truth->d));
  put_image(w, s.patch_a);
  put_image(w, s.patch_b);
  put_image(w, s.image_a);
  if (!os) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

Sample read_record(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::Io, "cannot open record " + path.string());
  BinaryReader r(is, path.string());
  char magic[8];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kRecordMagic, sizeof(magic)) != 0) {
    throw Error(ErrorCode::Format, path.string() + " is not a sample record");
  }
  if (r.u32() != kRecordVersion) throw Error(ErrorCode::Format, "unsupported record version in " + path.string());
  const bool has_truth = r.u8() != 0;
  Sample s;
  Shape shape;
  const auto corners = get_array(r, {4, 2}, shape);
  for (int k = 0; k < 4; ++k) s.corners_a.pts[k] = Vec2(corners[2 * k], corners[2 * k + 1]);
  if (has_truth) {
    const auto truth = get_array(r, {4, 2}, shape);
    s.truth = FourPointDelta::from_flat(truth.data());
  }
  s.patch_a = get_image(r);
  s.patch_b = get_image(r);
  s.image_a = get_image(r);
  if (!s.patch_a.same_shape(s.patch_b)) throw Error(ErrorCode::Format, "patch shapes differ in " + path.string());
  return s;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "records", ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + (dir / "records").string() + ": " + ec.message());
  if (static_cast<int>(ds.samples.size()) != ds.manifest.config.count) {
    throw Error(ErrorCode::InvalidConfig, "manifest count disagrees with the sample list");
  }
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    write_record(dir / record_name(static_cast<int>(i)), ds.samples[i]);
  }
  std::ofstream os(dir / "manifest.json", std::ios::trunc);
  if (!os) throw Error(ErrorCode::Io, "cannot write manifest in " + dir.string());
  os << nlohmann::json(ds.manifest).dump(2) << '\n';
  if (!os) throw Error(ErrorCode::Io, "failed writing manifest in " + dir.string());
}

Dataset read_dataset(const std::filesystem::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw Error(ErrorCode::Io, "no manifest.json in " + dir.string());
  Dataset ds;
  try {
    ds.manifest = nlohmann::json::parse(is).get<DatasetManifest>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Format, std::string("manifest: ") + e.what());
  }
  if (ds.manifest.format_version != kDatasetFormatVersion) {
    throw Error(ErrorCode::Format, "unsupported dataset format version " + std::to_string(ds.manifest.format_version));
  }
  ds.samples.reserve(ds.manifest.config.count);
  for (int i = 0; i < ds.manifest.config.count; ++i) ds.samples.push_back(read_record(dir / record_name(i)));
  return ds;
}

}  // namespace udh
