#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "udh/error.hpp"
#include "udh/rng.hpp"
#include "udh/tensor.hpp"

namespace udh {

/// Layer layout of the regression network. The final FC-8 head is implicit.
struct NetConfig {
  int input_size = 128;                 // square patch side
  int in_channels = 2;                  // stacked patch pair
  std::vector<int> conv_widths{64, 64, 64, 64, 128, 128, 128, 128};
  std::vector<int> pool_after{2, 4, 6};  // 1-based conv indices followed by 2x2 max-pool
  std::vector<int> fc_widths{1024};      // hidden FC layers before the head
  double dropout = 0.5;                  // applied before every FC layer
  double init_std = 0.01;

  static NetConfig vgg_default() { return {}; }
  /// Two 3x3 convs (16 and 32 channels), one 2x2 pool after the first, and the
  /// FC head; for desk-scale runs.
  static NetConfig toy(int input_size = 32);

  void validate() const;
};

void to_json(nlohmann::json& j, const NetConfig& c);
void from_json(const nlohmann::json& j, NetConfig& c);

enum class LayerKind { Conv, Relu, MaxPool, Dropout, Fc };

struct LayerSpec {
  LayerKind kind;
  int in_h, in_w, in_c;
  int out_h, out_w, out_c;
  int weight = -1;  // index into params, -1 when parameter-free
  int bias = -1;
};

/// Convolutional regressor mapping an N x h x w x 2 patch stack to N x 8 corner offsets.
///
/// Activations are stored as T; every reduction (convolution sums, FC dot
/// products, gradient accumulation) runs in double.
template <typename T>
class RegressionNet {
 public:
  explicit RegressionNet(NetConfig cfg);

  const NetConfig& config() const { return cfg_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  std::vector<Param<T>>& params() { return params_; }
  const std::vector<Param<T>>& params() const { return params_; }
  Param<T>* find_param(const std::string& name);

  /// Truncated-normal weights, zero biases, and an all-zero head so the
  /// untrained network predicts the zero offset.
  void init(std::uint64_t seed);

  void set_dropout_seed(std::uint64_t seed) { dropout_seed_ = seed; }

  Tensor<T> forward(const Tensor<T>& batch, bool train_mode);

  /// Overwrites every parameter gradient with d(sum(upstream * output))/dparam
  /// for the most recent forward call.
  void backward(const Tensor<T>& upstream);

  std::size_t parameter_count() const;

 private:
  void build();
  void forward_sample(std::size_t s, bool train_mode);
  void backward_sample(std::size_t s, const T* upstream, std::vector<std::vector<double>>& pgrad);

  NetConfig cfg_;
  std::vector<LayerSpec> layers_;
  std::vector<Param<T>> params_;

  // Forward state: acts_[s][l] is the input of layer l for sample s; the last entry is the output.
  std::vector<std::vector<std::vector<T>>> acts_;
  std::vector<std::vector<std::vector<std::uint32_t>>> aux_;  // pool argmax / dropout keep masks
  bool has_state_ = false;
  std::uint64_t dropout_seed_ = 0x5eed;
  std::uint64_t forward_calls_ = 0;
};

// ---------------------------------------------------------------------------

inline NetConfig NetConfig::toy(int input_size) {
  NetConfig c;
  c.input_size = input_size;
  c.conv_widths = {16, 32};
  c.pool_after = {1};
  c.fc_widths = {};
  c.dropout = 0.0;
  return c;
}

template <typename T>
RegressionNet<T>::RegressionNet(NetConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  build();
}

template <typename T>
void RegressionNet<T>::build() {
  int h = cfg_.input_size, w = cfg_.input_size, c = cfg_.in_channels;
  auto add_param = [&](std::string name, Shape shape) {
    params_.push_back({std::move(name), Tensor<T>(std::move(shape))});
    return static_cast<int>(params_.size()) - 1;
  };
  for (std::size_t i = 0; i < cfg_.conv_widths.size(); ++i) {
    const int oc = cfg_.conv_widths[i];
    const std::string base = "conv" + std::to_string(i + 1);
    const int wi = add_param(base + ".weight", {3, 3, c, oc});
    const int bi = add_param(base + ".bias", {oc});
    layers_.push_back({LayerKind::Conv, h, w, c, h, w, oc, wi, bi});
    c = oc;
    layers_.push_back({LayerKind::Relu, h, w, c, h, w, c});
    if (std::find(cfg_.pool_after.begin(), cfg_.pool_after.end(), static_cast<int>(i + 1)) !=
        cfg_.pool_after.end()) {
      layers_.push_back({LayerKind::MaxPool, h, w, c, h / 2, w / 2, c});
      h /= 2;
      w /= 2;
    }
  }
  int features = h * w * c;
  std::vector<int> widths = cfg_.fc_widths;
  widths.push_back(8);
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (cfg_.dropout > 0.0) {
      layers_.push_back({LayerKind::Dropout, 1, 1, features, 1, 1, features});
    }
    const bool head = i + 1 == widths.size();
    const std::string base = head ? std::string("head") : "fc" + std::to_string(i + 1);
    const int wi = add_param(base + ".weight", {widths[i], features});
    const int bi = add_param(base + ".bias", {widths[i]});
    layers_.push_back({LayerKind::Fc, 1, 1, features, 1, 1, widths[i], wi, bi});
    features = widths[i];
    if (!head) layers_.push_back({LayerKind::Relu, 1, 1, features, 1, 1, features});
  }
}

template <typename T>
Param<T>* RegressionNet<T>::find_param(const std::string& name) {
  for (auto& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

template <typename T>
std::size_t RegressionNet<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.numel();
  return n;
}

template <typename T>
void RegressionNet<T>::init(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, cfg_.init_std);
  for (auto& p : params_) {
    const bool is_bias = p.name.ends_with(".bias");
    const bool is_head = p.name.starts_with("head.");
    for (auto& x : p.tensor.value) {
      if (is_bias || is_head) {
        x = T{0};
        continue;
      }
      double r;
      do {
        r = normal(gen);
      } while (std::abs(r) > 2.0 * cfg_.init_std);
      x = static_cast<T>(r);
    }
    p.tensor.zero_grad();
  }
}

template <typename T>
Tensor<T> RegressionNet<T>::forward(const Tensor<T>& batch, bool train_mode) {
  batch.check_invariants();
  if (batch.shape.size() != 4 || batch.shape[1] != cfg_.input_size ||
      batch.shape[2] != cfg_.input_size || batch.shape[3] != cfg_.in_channels) {
    throw Error(ErrorCode::ShapeMismatch,
                "expected N x " + std::to_string(cfg_.input_size) + " x " +
                    std::to_string(cfg_.input_size) + " x " + std::to_string(cfg_.in_channels) +
                    " input, got " + shape_to_string(batch.shape));
  }
  const std::size_t n = static_cast<std::size_t>(batch.shape[0]);
  const std::size_t per = batch.numel() / std::max<std::size_t>(n, 1);
  acts_.assign(n, std::vector<std::vector<T>>(layers_.size() + 1));
  aux_.assign(n, std::vector<std::vector<std::uint32_t>>(layers_.size()));
  ++forward_calls_;
  for (std::size_t s = 0; s < n; ++s) {
    acts_[s][0].assign(batch.value.begin() + s * per, batch.value.begin() + (s + 1) * per);
    forward_sample(s, train_mode);
  }
  has_state_ = true;

  Tensor<T> out({static_cast<int>(n), 8});
  for (std::size_t s = 0; s < n; ++s) {
    std::copy(acts_[s].back().begin(), acts_[s].back().end(), out.value.begin() + s * 8);
  }
  return out;
}

template <typename T>
void RegressionNet<T>::forward_sample(std::size_t s, bool train_mode) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LayerSpec& L = layers_[l];
    const std::vector<T>& in = acts_[s][l];
    std::vector<T>& out = acts_[s][l + 1];
    out.assign(static_cast<std::size_t>(L.out_h) * L.out_w * L.out_c, T{0});
    switch (L.kind) {
      case LayerKind::Conv: {
        const T* wt = params_[L.weight].tensor.value.data();
        const T* bs = params_[L.bias].tensor.value.data();
        std::vector<double> acc(L.out_c);
        for (int y = 0; y < L.out_h; ++y) {
          for (int x = 0; x < L.out_w; ++x) {
            for (int o = 0; o < L.out_c; ++o) acc[o] = bs[o];
            for (int ky = 0; ky < 3; ++ky) {
              const int iy = y + ky - 1;
              if (iy < 0 || iy >= L.in_h) continue;
              for (int kx = 0; kx < 3; ++kx) {
                const int ix = x + kx - 1;
                if (ix < 0 || ix >= L.in_w) continue;
                const T* px = &in[(static_cast<std::size_t>(iy) * L.in_w + ix) * L.in_c];
                const T* wk = wt + static_cast<std::size_t>(ky * 3 + kx) * L.in_c * L.out_c;
                for (int c = 0; c < L.in_c; ++c) {
                  const double a = px[c];
                  if (a == 0.0) continue;
                  const T* wr = wk + static_cast<std::size_t>(c) * L.out_c;
                  for (int o = 0; o < L.out_c; ++o) acc[o] += a * static_cast<double>(wr[o]);
                }
              }
            }
            T* po = &out[(static_cast<std::size_t>(y) * L.out_w + x) * L.out_c];
            for (int o = 0; o < L.out_c; ++o) po[o] = static_cast<T>(acc[o]);
          }
        }
        break;
      }
      case LayerKind::Relu:
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > T{0} ? in[i] : T{0};
        break;
      case LayerKind::MaxPool: {
        auto& arg = aux_[s][l];
        arg.assign(out.size(), 0);
        for (int y = 0; y < L.out_h; ++y) {
          for (int x = 0; x < L.out_w; ++x) {
            for (int c = 0; c < L.out_c; ++c) {
              std::size_t best = (static_cast<std::size_t>(2 * y) * L.in_w + 2 * x) * L.in_c + c;
              for (int dy = 0; dy < 2; ++dy) {
                for (int dx = 0; dx < 2; ++dx) {
                  const std::size_t idx =
                      (static_cast<std::size_t>(2 * y + dy) * L.in_w + 2 * x + dx) * L.in_c + c;
                  if (in[idx] > in[best]) best = idx;
                }
              }
              const std::size_t o = (static_cast<std::size_t>(y) * L.out_w + x) * L.out_c + c;
              out[o] = in[best];
              arg[o] = static_cast<std::uint32_t>(best);
            }
          }
        }
        break;
      }
      case LayerKind::Dropout: {
        auto& keep = aux_[s][l];
        if (!train_mode || cfg_.dropout <= 0.0) {
          keep.clear();
          out = in;
          break;
        }
        SplitMix64 rng(mix_seed(dropout_seed_, forward_calls_, s, l));
        const double scale = 1.0 / (1.0 - cfg_.dropout);
        keep.assign(in.size(), 0);
        for (std::size_t i = 0; i < in.size(); ++i) {
          if (rng.uniform() >= cfg_.dropout) {
            keep[i] = 1;
            out[i] = static_cast<T>(in[i] * scale);
          }
        }
        break;
      }
      case LayerKind::Fc: {
        const T* wt = params_[L.weight].tensor.value.data();
        const T* bs = params_[L.bias].tensor.value.data();
        for (int o = 0; o < L.out_c; ++o) {
          const T* wr = wt + static_cast<std::size_t>(o) * L.in_c;
          double acc = bs[o];
          for (int i = 0; i < L.in_c; ++i) acc += static_cast<double>(wr[i]) * in[i];
          out[o] = static_cast<T>(acc);
        }
        break;
      }
    }
  }
}

template <typename T>
void RegressionNet<T>::backward(const Tensor<T>& upstream) {
  if (!has_state_) throw Error(ErrorCode::NoForwardState, "backward called before forward");
  const std::size_t n = acts_.size();
  if (upstream.shape != Shape{static_cast<int>(n), 8}) {
    throw Error(ErrorCode::ShapeMismatch, "upstream gradient must be " + std::to_string(n) +
                                              " x 8, got " + shape_to_string(upstream.shape));
  }
  std::vector<std::vector<double>> total(params_.size());
  std::vector<std::vector<double>> sample(params_.size());
  for (std::size_t p = 0; p < params_.size(); ++p) total[p].assign(params_[p].tensor.numel(), 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t p = 0; p < params_.size(); ++p) sample[p].assign(params_[p].tensor.numel(), 0.0);
    backward_sample(s, upstream.value.data() + s * 8, sample);
    for (std::size_t p = 0; p < params_.size(); ++p) {
      for (std::size_t i = 0; i < total[p].size(); ++i) total[p][i] += sample[p][i];
    }
  }
  for (std::size_t p = 0; p < params_.size(); ++p) {
    auto& t = params_[p].tensor;
    t.grad.resize(t.numel());
    for (std::size_t i = 0; i < total[p].size(); ++i) t.grad[i] = static_cast<T>(total[p][i]);
  }
}

template <typename T>
void RegressionNet<T>::backward_sample(std::size_t s, const T* upstream,
                                       std::vector<std::vector<double>>& pgrad) {
  std::vector<double> g(upstream, upstream + 8);
  std::vector<double> gin;
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const LayerSpec& L = layers_[li];
    const std::vector<T>& in = acts_[s][li];
    gin.assign(in.size(), 0.0);
    switch (L.kind) {
      case LayerKind::Conv: {
        const T* wt = params_[L.weight].tensor.value.data();
        double* gw = pgrad[L.weight].data();
        double* gb = pgrad[L.bias].data();
        for (int y = 0; y < L.out_h; ++y) {
          for (int x = 0; x < L.out_w; ++x) {
            const double* go = &g[(static_cast<std::size_t>(y) * L.out_w + x) * L.out_c];
            for (int o = 0; o < L.out_c; ++o) gb[o] += go[o];
            for (int ky = 0; ky < 3; ++ky) {
              const int iy = y + ky - 1;
              if (iy < 0 || iy >= L.in_h) continue;
              for (int kx = 0; kx < 3; ++kx) {
                const int ix = x + kx - 1;
                if (ix < 0 || ix >= L.in_w) continue;
                const std::size_t base = (static_cast<std::size_t>(iy) * L.in_w + ix) * L.in_c;
                const std::size_t koff = static_cast<std::size_t>(ky * 3 + kx) * L.in_c * L.out_c;
                for (int c = 0; c < L.in_c; ++c) {
                  const double a = in[base + c];
                  const T* wr = wt + koff + static_cast<std::size_t>(c) * L.out_c;
                  double* gwr = gw + koff + static_cast<std::size_t>(c) * L.out_c;
                  double back = 0.0;
                  for (int o = 0; o < L.out_c; ++o) {
                    gwr[o] += a * go[o];
                    back += static_cast<double>(wr[o]) * go[o];
                  }
                  gin[base + c] += back;
                }
              }
            }
          }
        }
        break;
      }
      case LayerKind::Relu:
        for (std::size_t i = 0; i < in.size(); ++i) gin[i] = in[i] > T{0} ? g[i] : 0.0;
        break;
      case LayerKind::MaxPool: {
        const auto& arg = aux_[s][li];
        for (std::size_t o = 0; o < g.size(); ++o) gin[arg[o]] += g[o];
        break;
      }
      case LayerKind::Dropout: {
        const auto& keep = aux_[s][li];
        if (keep.empty()) {
          gin = g;
          break;
        }
        const double scale = 1.0 / (1.0 - cfg_.dropout);
        for (std::size_t i = 0; i < in.size(); ++i) gin[i] = keep[i] ? g[i] * scale : 0.0;
        break;
      }
      case LayerKind::Fc: {
        const T* wt = params_[L.weight].tensor.value.data();
        double* gw = pgrad[L.weight].data();
        double* gb = pgrad[L.bias].data();
        for (int o = 0; o < L.out_c; ++o) {
          const double go = g[o];
          gb[o] += go;
          if (go == 0.0) continue;
          const T* wr = wt + static_cast<std::size_t>(o) * L.in_c;
          double* gwr = gw + static_cast<std::size_t>(o) * L.in_c;
          for (int i = 0; i < L.in_c; ++i) {
            gwr[i] += go * in[i];
            gin[i] += go * static_cast<double>(wr[i]);
          }
        }
        break;
      }
    }
    g.swap(gin);
  }
}

}  // namespace udh
