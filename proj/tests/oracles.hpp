#pragma once

// Independent reference computations used to freeze expected values in tests.
// Nothing here calls into the code path it is used to check.

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "udh/geom.hpp"
#include "udh/image.hpp"
#include "udh/rng.hpp"

namespace udh::oracle {

/// Direct scalar evaluation of the projective map on a row-major 3x3 array.
inline std::array<double, 2> scalar_project(const std::array<double, 9>& h, double u, double v) {
  const double w = h[6] * u + h[7] * v + h[8];
  return {(h[0] * u + h[1] * v + h[2]) / w, (h[3] * u + h[4] * v + h[5]) / w};
}

/// Closed-form unit-square-to-quad homography (Heckbert's projective mapping),
/// composed with the affine map taking the unit square to an axis-aligned
/// square at (x0, y0) with side `size`. Returns the square-to-quad homography.
inline Mat3 square_to_quad(double x0, double y0, double size, const std::array<Vec2, 4>& q) {
  const double sx = q[0].x() - q[1].x() + q[2].x() - q[3].x();
  const double sy = q[0].y() - q[1].y() + q[2].y() - q[3].y();
  double a, b, c, d, e, f, g, h;
  if (sx == 0.0 && sy == 0.0) {
    a = q[1].x() - q[0].x();
    b = q[2].x() - q[1].x();
    c = q[0].x();
    d = q[1].y() - q[0].y();
    e = q[2].y() - q[1].y();
    f = q[0].y();
    g = h = 0.0;
  } else {
    const double dx1 = q[1].x() - q[2].x(), dx2 = q[3].x() - q[2].x();
    const double dy1 = q[1].y() - q[2].y(), dy2 = q[3].y() - q[2].y();
    const double den = dx1 * dy2 - dx2 * dy1;
    g = (sx * dy2 - dx2 * sy) / den;
    h = (dx1 * sy - sx * dy1) / den;
    a = q[1].x() - q[0].x() + g * q[1].x();
    b = q[3].x() - q[0].x() + h * q[3].x();
    c = q[0].x();
    d = q[1].y() - q[0].y() + g * q[1].y();
    e = q[3].y() - q[0].y() + h * q[3].y();
    f = q[0].y();
  }
  Mat3 unit_to_quad;
  unit_to_quad << a, b, c, d, e, f, g, h, 1.0;
  Mat3 square_to_unit;
  square_to_unit << 1.0 / size, 0, -x0 / size, 0, 1.0 / size, -y0 / size, 0, 0, 1;
  Mat3 out = unit_to_quad * square_to_unit;
  return out / out(2, 2);
}

/// Central difference of a scalar function of one variable.
inline double central_diff(const std::function<double(double)>& f, double x, double eps) {
  return (f(x + eps) - f(x - eps)) / (2.0 * eps);
}

/// Relative error with an absolute floor so near-zero gradients compare sanely.
inline double rel_err(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Bilinear sample written as the literal double sum over every pixel.
inline double brute_bilinear(const Image& img, double u, double v, int c = 0) {
  double acc = 0.0;
  for (int n = 0; n < img.height(); ++n) {
    for (int m = 0; m < img.width(); ++m) {
      acc += img.at(n, m, c) * std::max(0.0, 1.0 - std::abs(u - m)) * std::max(0.0, 1.0 - std::abs(v - n));
    }
  }
  return acc;
}

/// Smooth analytic test image in [0, 1].
inline Image smooth_image(int h, int w, double phase = 0.0) {
  Image img(h, w, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.at(y, x) = 0.5 + 0.2 * std::sin(0.11 * x + phase) * std::cos(0.07 * y) +
                     0.15 * std::sin(0.05 * (x + y) + 0.3 * phase);
    }
  }
  return img;
}

inline Image random_image(int h, int w, int c, std::uint64_t seed) {
  Image img(h, w, c);
  SplitMix64 rng(seed);
  for (double& x : img.values()) x = rng.uniform();
  return img;
}

/// Two-pass population mean / std.
inline std::array<double, 2> two_pass_stats(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

}  // namespace udh::oracle
