#include <gtest/gtest.h>

#include "oracles.hpp"
#include "udh/adam.hpp"
#include "udh/error.hpp"
#include "udh/losses.hpp"
#include "udh/nn.hpp"

namespace udh {
namespace {

template <typename T>
Tensor<T> random_batch(int n, int size, std::uint64_t seed) {
  Tensor<T> t({n, size, size, 2});
  SplitMix64 rng(seed);
  for (auto& x : t.value) x = static_cast<T>(rng.uniform(-1, 1));
  return t;
}

template <typename T>
void randomize(RegressionNet<T>& net, std::uint64_t seed, double scale) {
  SplitMix64 rng(seed);
  for (auto& p : net.params()) {
    for (auto& x : p.tensor.value) x = static_cast<T>(rng.uniform(-scale, scale));
  }
}

NetConfig tiny_config(int size, bool pool, std::vector<int> fc, double dropout) {
  NetConfig c;
  c.input_size = size;
  c.conv_widths = {3};
  c.pool_after = pool ? std::vector<int>{1} : std::vector<int>{};
  c.fc_widths = std::move(fc);
  c.dropout = dropout;
  return c;
}

template <typename T>
double weighted_output(RegressionNet<T> net, const Tensor<T>& batch, const Tensor<T>& upstream, bool train) {
  const Tensor<T> out = net.forward(batch, train);
  double s = 0.0;
  for (std::size_t i = 0; i < out.numel(); ++i) s += static_cast<double>(out.value[i]) * upstream.value[i];
  return s;
}

// Compares every parameter gradient against central differences. The net is
// copied before each evaluation so dropout masks repeat.
template <typename T>
void check_param_gradients(const RegressionNet<T>& snapshot, const Tensor<T>& batch, double eps, double tol,
                           bool train) {
  Tensor<T> upstream({batch.shape[0], 8});
  SplitMix64 rng(77);
  for (auto& x : upstream.value) x = static_cast<T>(rng.uniform(-1, 1));

  RegressionNet<T> net = snapshot;
  net.forward(batch, train);
  net.backward(upstream);

  double worst = 0.0;
  std::string where;
  for (std::size_t k = 0; k < net.params().size(); ++k) {
    const auto& analytic = net.params()[k].tensor.grad;
    double scale = 0.0;
    for (T g : analytic) scale = std::max(scale, std::abs(static_cast<double>(g)));
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      auto eval = [&](double x) {
        RegressionNet<T> probe = snapshot;
        probe.params()[k].tensor.value[i] = static_cast<T>(x);
        return weighted_output(probe, batch, upstream, train);
      };
      const double x0 = snapshot.params()[k].tensor.value[i];
      const double num = oracle::central_diff(eval, x0, eps);
      // Entries far below the tensor's gradient scale are compared against that scale.
      const double err = std::abs(analytic[i] - num) / std::max({std::abs(num), 1e-2 * scale, 1e-6});
      if (err > worst) {
        worst = err;
        where = net.params()[k].name + "[" + std::to_string(i) + "]";
      }
    }
  }
  EXPECT_LE(worst, tol) << where;
}

TEST(RegressionNet, ZeroHeadGivesZeroOutput) {
  RegressionNet<float> net(NetConfig::toy(32));
  net.init(1);
  const Tensor<float> zeros({2, 32, 32, 2});
  for (float x : net.forward(zeros, false).value) EXPECT_EQ(x, 0.0f);
  for (float x : net.forward(random_batch<float>(2, 32, 3), true).value) EXPECT_EQ(x, 0.0f);
}

TEST(RegressionNet, OutputShape) {
  RegressionNet<float> net(NetConfig::toy(32));
  net.init(2);
  const Tensor<float> out = net.forward(random_batch<float>(3, 32, 4), false);
  EXPECT_EQ(out.shape, (Shape{3, 8}));
}

TEST(RegressionNet, DefaultArchitecture) {
  RegressionNet<float> net(NetConfig::vgg_default());
  int convs = 0, pools = 0, fcs = 0, drops = 0;
  for (const auto& l : net.layers()) {
    convs += l.kind == LayerKind::Conv;
    pools += l.kind == LayerKind::MaxPool;
    fcs += l.kind == LayerKind::Fc;
    drops += l.kind == LayerKind::Dropout;
  }
  EXPECT_EQ(convs, 8);
  EXPECT_EQ(pools, 3);
  EXPECT_EQ(fcs, 2);
  EXPECT_EQ(drops, 2);
  EXPECT_EQ(net.find_param("fc1.weight")->tensor.shape, (Shape{1024, 16 * 16 * 128}));
  EXPECT_EQ(net.find_param("head.weight")->tensor.shape, (Shape{8, 1024}));
}

TEST(RegressionNet, ConvMatchesScalarCrossCorrelation) {
  NetConfig c = tiny_config(5, false, {}, 0.0);
  c.conv_widths = {1};
  RegressionNet<double> net(c);
  net.init(3);
  SplitMix64 rng(4);
  double kernel[3][3][2];
  auto& w = net.find_param("conv1.weight")->tensor.value;
  for (int ky = 0; ky < 3; ++ky) {
    for (int kx = 0; kx < 3; ++kx) {
      for (int ic = 0; ic < 2; ++ic) {
        kernel[ky][kx][ic] = rng.uniform(-1, 1);
        w[(ky * 3 + kx) * 2 + ic] = kernel[ky][kx][ic];
      }
    }
  }
  net.find_param("conv1.bias")->tensor.value[0] = 10.0;  // keeps the ReLU in its linear range
  // The head reads out eight of the 25 feature-map entries.
  const int picks[8] = {0, 4, 6, 12, 13, 18, 20, 24};
  auto& head = net.find_param("head.weight")->tensor.value;
  for (int o = 0; o < 8; ++o) head[o * 25 + picks[o]] = 1.0;

  const Tensor<double> in = random_batch<double>(1, 5, 5);
  const Tensor<double> out = net.forward(in, false);
  for (int o = 0; o < 8; ++o) {
    const int y = picks[o] / 5, x = picks[o] % 5;
    double expect = 10.0;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const int sy = y + ky - 1, sx = x + kx - 1;
        if (sy < 0 || sy >= 5 || sx < 0 || sx >= 5) continue;
        for (int ic = 0; ic < 2; ++ic) expect += kernel[ky][kx][ic] * in.value[(sy * 5 + sx) * 2 + ic];
      }
    }
    EXPECT_NEAR(out.value[o], expect, 1e-12);
  }
}

TEST(RegressionNet, ShapeMismatchAndMissingState) {
  RegressionNet<float> net(NetConfig::toy(32));
  net.init(5);
  try {
    net.forward(random_batch<float>(1, 16, 6), false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
  try {
    net.backward(Tensor<float>({1, 8}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoForwardState);
  }
  net.forward(random_batch<float>(2, 32, 7), true);
  try {
    net.backward(Tensor<float>({3, 8}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
}

TEST(RegressionNet, InvalidConfigRejected) {
  NetConfig c = NetConfig::toy(30);
  c.pool_after = {1, 2};  // 30 -> 15 cannot be pooled again
  EXPECT_THROW(RegressionNet<float>{c}, Error);
  c = NetConfig::toy(32);
  c.in_channels = 3;
  EXPECT_THROW(RegressionNet<float>{c}, Error);
}

TEST(RegressionNet, ZeroUpstreamZeroGrads) {
  RegressionNet<float> net(NetConfig::toy(32));
  net.init(8);
  randomize(net, 9, 0.1);
  net.forward(random_batch<float>(2, 32, 10), true);
  net.backward(Tensor<float>({2, 8}));
  for (const auto& p : net.params()) {
    for (float g : p.tensor.grad) EXPECT_EQ(g, 0.0f) << p.name;
  }
}

TEST(RegressionNet, DuplicateSampleDoublesGradient) {
  RegressionNet<float> net(NetConfig::toy(32));
  net.init(11);
  randomize(net, 12, 0.1);
  const Tensor<float> one = random_batch<float>(1, 32, 13);
  Tensor<float> two({2, 32, 32, 2});
  std::copy(one.value.begin(), one.value.end(), two.value.begin());
  std::copy(one.value.begin(), one.value.end(), two.value.begin() + one.numel());
  Tensor<float> up1({1, 8}), up2({2, 8});
  SplitMix64 rng(14);
  for (int k = 0; k < 8; ++k) up1.value[k] = up2.value[k] = up2.value[8 + k] = static_cast<float>(rng.uniform(-1, 1));

  net.forward(one, true);
  net.backward(up1);
  std::vector<std::vector<float>> single;
  for (const auto& p : net.params()) single.push_back(p.tensor.grad);
  net.forward(two, true);
  net.backward(up2);
  for (std::size_t k = 0; k < single.size(); ++k) {
    for (std::size_t i = 0; i < single[k].size(); ++i) {
      EXPECT_EQ(net.params()[k].tensor.grad[i], 2.0f * single[k][i]) << net.params()[k].name;
    }
  }
}

TEST(RegressionNetGradients, ConvReluFcDouble) {
  RegressionNet<double> net(tiny_config(4, false, {}, 0.0));
  randomize(net, 15, 0.5);
  check_param_gradients(net, random_batch<double>(2, 4, 16), 1e-6, 1e-5, true);
}

TEST(RegressionNetGradients, PoolAndHiddenFcDouble) {
  RegressionNet<double> net(tiny_config(6, true, {5}, 0.0));
  randomize(net, 17, 0.5);
  check_param_gradients(net, random_batch<double>(2, 6, 18), 1e-6, 1e-5, true);
}

TEST(RegressionNetGradients, DropoutDouble) {
  RegressionNet<double> net(tiny_config(4, true, {6}, 0.3));
  randomize(net, 19, 0.5);
  net.set_dropout_seed(20);
  check_param_gradients(net, random_batch<double>(2, 4, 21), 1e-6, 1e-5, true);
}

TEST(RegressionNetGradients, TinyNetFloat) {
  RegressionNet<float> net(tiny_config(6, true, {}, 0.0));
  randomize(net, 22, 0.5);
  check_param_gradients(net, random_batch<float>(1, 6, 23), 1e-3, 1e-2, true);
}

TEST(RegressionNet, DropoutReproducibility) {
  NetConfig c = tiny_config(4, false, {16}, 0.5);
  RegressionNet<float> a(c), b(c);
  a.init(24);
  b.init(24);
  randomize(a, 25, 0.5);
  randomize(b, 25, 0.5);
  a.set_dropout_seed(26);
  b.set_dropout_seed(26);
  const Tensor<float> in = random_batch<float>(3, 4, 27);
  EXPECT_EQ(a.forward(in, true).value, b.forward(in, true).value);
  EXPECT_EQ(a.forward(in, false).value, a.forward(in, false).value);
  // Successive training passes draw fresh masks.
  EXPECT_NE(a.forward(in, true).value, a.forward(in, true).value);
}

TEST(RegressionNet, InitIsSeededAndTruncated) {
  RegressionNet<float> a(NetConfig::toy(32)), b(NetConfig::toy(32));
  a.init(28);
  b.init(28);
  for (std::size_t k = 0; k < a.params().size(); ++k) {
    EXPECT_EQ(a.params()[k].tensor.value, b.params()[k].tensor.value);
    for (float x : a.params()[k].tensor.value) EXPECT_LE(std::abs(x), 0.02f + 1e-7f);
  }
  for (float x : a.find_param("head.weight")->tensor.value) EXPECT_EQ(x, 0.0f);
  for (float x : a.find_param("conv1.bias")->tensor.value) EXPECT_EQ(x, 0.0f);
}

TEST(NetConfigJson, RoundTripAndUnknownKeys) {
  const NetConfig c = NetConfig::toy(32);
  const nlohmann::json j = c;
  const NetConfig back = j.get<NetConfig>();
  EXPECT_EQ(back.conv_widths, c.conv_widths);
  EXPECT_EQ(back.pool_after, c.pool_after);
  EXPECT_EQ(back.input_size, 32);
  nlohmann::json bad = j;
  bad["widths"] = 3;
  EXPECT_THROW(bad.get<NetConfig>(), Error);
}

TEST(SupervisedLoss, Examples) {
  Tensor<double> a({1, 8}), b({1, 8});
  EXPECT_EQ(supervised_loss(a, b).value, 0.0);
  for (auto& x : a.value) x = 1.0;
  const auto l = supervised_loss(a, b);
  EXPECT_DOUBLE_EQ(l.value, 4.0);
  for (double g : l.grad.value) EXPECT_DOUBLE_EQ(g, 1.0);

  SplitMix64 rng(29);
  Tensor<double> p({3, 8}), t({3, 8});
  for (auto& x : p.value) x = rng.uniform(-5, 5);
  for (auto& x : t.value) x = rng.uniform(-5, 5);
  double expect = 0.0;
  for (int n = 0; n < 3; ++n) {
    double s = 0.0;
    for (int k = 0; k < 8; ++k) s += (p.value[n * 8 + k] - t.value[n * 8 + k]) * (p.value[n * 8 + k] - t.value[n * 8 + k]);
    expect += 0.5 * s;
  }
  const auto r = supervised_loss(p, t);
  EXPECT_NEAR(r.value, expect / 3, 1e-12);
  for (int i = 0; i < 24; ++i) EXPECT_NEAR(r.grad.value[i], (p.value[i] - t.value[i]) / 3, 1e-15);
  EXPECT_GE(r.value, 0.0);
  EXPECT_THROW(supervised_loss(p, a), Error);
}

TEST(PhotometricLoss, Examples) {
  const Image a = oracle::random_image(6, 7, 1, 30);
  const ImageLoss same = photometric_loss(a, a);
  EXPECT_EQ(same.value, 0.0);
  for (double g : same.grad.values()) EXPECT_EQ(g, 0.0);

  Image shifted = a;
  for (double& x : shifted.values()) x += 0.25;
  EXPECT_NEAR(photometric_loss(shifted, a).value, 0.25, 1e-15);

  const Image b = oracle::random_image(6, 7, 1, 31);
  double expect = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) expect += std::abs(a.values()[i] - b.values()[i]);
  const ImageLoss r = photometric_loss(a, b);
  EXPECT_NEAR(r.value, expect / 42, 1e-15);
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    EXPECT_EQ(r.grad.values()[i], (a.values()[i] > b.values()[i] ? 1.0 : -1.0) / 42);
  }
  EXPECT_THROW(photometric_loss(a, Image(6, 6, 1)), Error);
}

TEST(Standardize, Examples) {
  const Image a = oracle::random_image(4, 4, 1, 32);
  EXPECT_EQ(standardize(a, 0.0, 1.0), a);
  const Image c(3, 3, 1, 0.4);
  const Image z = standardize(c, 0.4, 0.2);
  for (double x : z.values()) EXPECT_EQ(x, 0.0);
  const Image back = destandardize(standardize(a, 0.45, 0.21), 0.45, 0.21);
  for (std::size_t i = 0; i < a.values().size(); ++i) EXPECT_NEAR(back.values()[i], a.values()[i], 1e-6);
  try {
    standardize(a, 0.5, 1e-9);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateStd);
  }
}

TEST(Adam, ZeroGradientLeavesParams) {
  std::vector<Param<double>> ps{{"p", Tensor<double>({3}, 1.5)}};
  ps[0].tensor.zero_grad();
  AdamState st;
  adam_step(std::span<Param<double>>(ps), st);
  for (double x : ps[0].tensor.value) EXPECT_EQ(x, 1.5);
  EXPECT_EQ(st.t, 1);
}

TEST(Adam, FirstStepIsLearningRate) {
  std::vector<Param<double>> ps{{"p", Tensor<double>({2})}};
  ps[0].tensor.grad = {0.3, -7.0};
  AdamState st;
  st.lr = 0.01;
  adam_step(std::span<Param<double>>(ps), st);
  EXPECT_NEAR(ps[0].tensor.value[0], -0.01, 1e-9);
  EXPECT_NEAR(ps[0].tensor.value[1], 0.01, 1e-9);
}

TEST(Adam, MatchesScalarRecurrence) {
  std::vector<Param<double>> ps{{"p", Tensor<double>({1}, 2.0)}};
  AdamState st;
  st.lr = 0.05;
  double x = 2.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 10; ++t) {
    const double g = 0.5 * x - 0.1;  // a gradient that depends on the iterate
    ps[0].tensor.grad = {g};
    adam_step(std::span<Param<double>>(ps), st);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1.0 - std::pow(0.9, t));
    const double vh = v / (1.0 - std::pow(0.999, t));
    x -= 0.05 * mh / (std::sqrt(vh) + 1e-8);
    EXPECT_NEAR(ps[0].tensor.value[0], x, 1e-12);
  }
}

TEST(Adam, DeterministicAndShapeChecked) {
  auto run = [] {
    std::vector<Param<float>> ps{{"p", Tensor<float>({4}, 0.5f)}};
    ps[0].tensor.grad = {0.1f, -0.2f, 0.3f, 0.0f};
    AdamState st;
    for (int i = 0; i < 5; ++i) adam_step(std::span<Param<float>>(ps), st);
    return ps[0].tensor.value;
  };
  EXPECT_EQ(run(), run());

  std::vector<Param<float>> ps{{"p", Tensor<float>({4})}};
  AdamState st;
  EXPECT_THROW(adam_step(std::span<Param<float>>(ps), st), Error);  // no gradient buffer
}

}  // namespace
}  // namespace udh
