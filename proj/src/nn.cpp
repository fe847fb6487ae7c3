#include <cmath>
#include <string>

#include "udh/losses.hpp"
#include "udh/nn.hpp"
#include "udh/tensor.hpp"

namespace udh {

std::string shape_to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

void NetConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
  if (input_size < 1) fail("input_size must be positive");
  if (in_channels != 2) fail("the regressor consumes a 2-channel patch stack");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (!(init_std > 0.0)) fail("init_std must be positive");
  int size = input_size;
  for (std::size_t i = 0; i < conv_widths.size(); ++i) {
    if (conv_widths[i] < 1) fail("conv widths must be positive");
    for (int p : pool_after) {
      if (p == static_cast<int>(i + 1)) {
        if (size % 2 != 0) fail("max-pool after conv" + std::to_string(i + 1) + " needs an even size");
        size /= 2;
      }
    }
  }
  for (int p : pool_after) {
    if (p < 1 || p > static_cast<int>(conv_widths.size())) fail("pool_after index out of range");
  }
  for (int w : fc_widths) {
    if (w < 1) fail("fc widths must be positive");
  }
}

void to_json(nlohmann::json& j, const NetConfig& c) {
  j = nlohmann::json{{"input_size", c.input_size},   {"in_channels", c.in_channels},
                     {"conv_widths", c.conv_widths}, {"pool_after", c.pool_after},
                     {"fc_widths", c.fc_widths},     {"dropout", c.dropout},
                     {"init_std", c.init_std}};
}

void from_json(const nlohmann::json& j, NetConfig& c) {
  for (const auto& [key, _] : j.items()) {
    if (key != "input_size" && key != "in_channels" && key != "conv_widths" && key != "pool_after" &&
        key != "fc_widths" && key != "dropout" && key != "init_std") {
      throw Error(ErrorCode::InvalidConfig, "unknown network config key '" + key + "'");
    }
  }
  NetConfig d;
  c.input_size = j.value("input_size", d.input_size);
  c.in_channels = j.value("in_channels", d.in_channels);
  c.conv_widths = j.value("conv_widths", d.conv_widths);
  c.pool_after = j.value("pool_after", d.pool_after);
  c.fc_widths = j.value("fc_widths", d.fc_widths);
  c.dropout = j.value("dropout", d.dropout);
  c.init_std = j.value("init_std", d.init_std);
}

ImageLoss photometric_loss(const Image& warped_a, const Image& patch_b) {
  if (!warped_a.same_shape(patch_b)) {
    throw Error(ErrorCode::ShapeMismatch, "photometric_loss expects identical patch shapes");
  }
  const auto a = warped_a.values();
  const auto b = patch_b.values();
  const double count = static_cast<double>(a.size());
  ImageLoss out{0.0, Image(warped_a.height(), warped_a.width(), warped_a.channels())};
  auto g = out.grad.values();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    out.value += std::abs(d);
    g[i] = d > 0.0 ? 1.0 / count : (d < 0.0 ? -1.0 / count : 0.0);
  }
  out.value /= count;
  return out;
}

Image standardize(const Image& img, double mean, double std) {
  if (!(std > 1e-8)) throw Error(ErrorCode::DegenerateStd, "standard deviation must exceed 1e-8");
  Image out = img;
  for (double& x : out.values()) x = (x - mean) / std;
  return out;
}

Image destandardize(const Image& img, double mean, double std) {
  if (!(std > 1e-8)) throw Error(ErrorCode::DegenerateStd, "standard deviation must exceed 1e-8");
  Image out = img;
  for (double& x : out.values()) x = x * std + mean;
  return out;
}

template class RegressionNet<float>;
template class RegressionNet<double>;

}  // namespace udh
