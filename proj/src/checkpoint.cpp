#include "udh/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "udh/binary_io.hpp"

namespace udh {

namespace {

template <typename T>
constexpr std::uint8_t dtype_tag() {
  return sizeof(T) == 4 ? 1 : 2;
}

nlohmann::json meta_to_json(const CheckpointMeta& meta, std::uint8_t dtype) {
  return {{"net", meta.net},
          {"dtype", dtype == 1 ? "f32" : "f64"},
          {"stats", {{"mean", meta.mean}, {"std", meta.std}}},
          {"iteration", meta.iteration}};
}

}  // namespace

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const RegressionNet<T>& net,
                     const CheckpointMeta& meta) {
  const auto tmp = std::filesystem::path(path.string() + ".partial");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorCode::Io, "cannot open " + tmp.string() + " for writing");
    BinaryWriter w(os);
    w.bytes(kCheckpointMagic, sizeof(kCheckpointMagic));
    w.u32(kCheckpointVersion);
    CheckpointMeta m = meta;
    m.net = net.config();
    w.str(meta_to_json(m, dtype_tag<T>()).dump());
    w.u32(static_cast<std::uint32_t>(net.params().size()));
    for (const auto& p : net.params()) {
      w.str(p.name);
      w.u8(dtype_tag<T>());
      w.u32(static_cast<std::uint32_t>(p.tensor.shape.size()));
      for (int d : p.tensor.shape) w.u32(static_cast<std::uint32_t>(d));
      for (T x : p.tensor.value) {
        if constexpr (sizeof(T) == 4) {
          w.f32(x);
        } else {
          w.f64(x);
        }
      }
    }
    os.flush();
    if (!os) {
      os.close();
      std::filesystem::remove(tmp);
      throw Error(ErrorCode::Io, "failed writing checkpoint " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error(ErrorCode::Io, "cannot move checkpoint into place at " + path.string() + ": " + ec.message());
  }
}

template <typename T>
RegressionNet<T> load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::Io, "cannot open checkpoint " + path.string());
  BinaryReader r(is, path.string());
  char magic[8];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw Error(ErrorCode::Format, path.string() + " is not a checkpoint");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::Format, "unsupported checkpoint version " + std::to_string(version));
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(r.str());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Format, std::string("checkpoint metadata: ") + e.what());
  }
  CheckpointMeta m;
  try {
    m.net = j.at("net").get<NetConfig>();
    m.mean = j.at("stats").at("mean").get<double>();
    m.std = j.at("stats").at("std").get<double>();
    m.iteration = j.value("iteration", std::int64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Format, std::string("checkpoint metadata: ") + e.what());
  }

  RegressionNet<T> net(m.net);
  const std::uint32_t count = r.u32();
  if (count != net.params().size()) {
    throw Error(ErrorCode::Format, "checkpoint holds " + std::to_string(count) +
                                       " parameters, config expects " +
                                       std::to_string(net.params().size()));
  }
  for (auto& p : net.params()) {
    const std::string name = r.str(4096);
    if (name != p.name) throw Error(ErrorCode::Format, "expected parameter '" + p.name + "', found '" + name + "'");
    const std::uint8_t tag = r.u8();
    if (tag != dtype_tag<T>()) throw Error(ErrorCode::Format, "dtype mismatch for '" + name + "'");
    Shape shape(r.u32());
    if (shape.size() > 8) throw Error(ErrorCode::Format, "bad rank for '" + name + "'");
    for (int& d : shape) d = static_cast<int>(r.u32());
    if (shape != p.tensor.shape) {
      throw Error(ErrorCode::Format, "shape " + shape_to_string(shape) + " for '" + name +
                                         "' does not match config " + shape_to_string(p.tensor.shape));
    }
    for (T& x : p.tensor.value) {
      if constexpr (sizeof(T) == 4) {
        x = r.f32();
      } else {
        x = r.f64();
      }
    }
    p.tensor.zero_grad();
  }
  if (meta) *meta = m;
  return net;
}

template void save_checkpoint<float>(const std::filesystem::path&, const RegressionNet<float>&,
                                     const CheckpointMeta&);
template void save_checkpoint<double>(const std::filesystem::path&, const RegressionNet<double>&,
                                      const CheckpointMeta&);
template RegressionNet<float> load_checkpoint<float>(const std::filesystem::path&, CheckpointMeta*);
template RegressionNet<double> load_checkpoint<double>(const std::filesystem::path&, CheckpointMeta*);

}  // namespace udh
