#include "udh/warp.hpp"

#include <cassert>
#include <cmath>

#include <Eigen/LU>

#include "udh/error.hpp"

namespace udh {

Image Image::crop(int x0, int y0, int w, int h) const {
  Image out(h, w, channels_);
  for (int y = 0; y < h; ++y) {
    const int sy = y0 + y;
    if (sy < 0 || sy >= height_) continue;
    for (int x = 0; x < w; ++x) {
      const int sx = x0 + x;
      if (sx < 0 || sx >= width_) continue;
      for (int c = 0; c < channels_; ++c) out.at(y, x, c) = at(sy, sx, c);
    }
  }
  return out;
}

Mat3 norm_matrix(int width, int height) {
  Mat3 m;
  m << width / 2.0, 0, width / 2.0, 0, height / 2.0, height / 2.0, 0, 0, 1;
  return m;
}

Homography normalized_inverse(const Homography& h, int target_w, int target_h) {
  const Mat3 m = norm_matrix(target_w, target_h);
  const Mat3 m_inv = m.inverse();
  return Homography::from_matrix(m_inv * invert(h).matrix() * m);
}

SampleGrid generate_grid(const Homography& h_inv, int target_w, int target_h) {
  SampleGrid grid(target_h, target_w);
  for (int i = 0; i < target_h; ++i) {
    for (int j = 0; j < target_w; ++j) {
      const double xn = 2.0 * j / target_w - 1.0;
      const double yn = 2.0 * i / target_h - 1.0;
      const Eigen::Vector3d s = h_inv.matrix() * Eigen::Vector3d(xn, yn, 1.0);
      if (!(std::abs(s.z()) > kProjectionEps)) {
        throw Error(ErrorCode::DegenerateProjection, "grid point maps to infinity");
      }
      grid.u(i, j) = target_w / 2.0 * (s.x() / s.z() + 1.0);
      grid.v(i, j) = target_h / 2.0 * (s.y() / s.z() + 1.0);
    }
  }
  return grid;
}

SampleGrid projective_grid(const Homography& map, int x0, int y0, int w, int h) {
  SampleGrid grid(h, w);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const Vec2 p = project(map, Vec2(x0 + j, y0 + i));
      grid.u(i, j) = p.x();
      grid.v(i, j) = p.y();
    }
  }
  return grid;
}

Mat3 projective_grid_backward(const Homography& map, int x0, int y0, const SampleGrid& grad_grid) {
  const Mat3& m = map.matrix();
  Mat3 g = Mat3::Zero();
  for (int i = 0; i < grad_grid.height(); ++i) {
    for (int j = 0; j < grad_grid.width(); ++j) {
      const double gu = grad_grid.u(i, j);
      const double gv = grad_grid.v(i, j);
      if (gu == 0.0 && gv == 0.0) continue;
      const Eigen::Vector3d x(x0 + j, y0 + i, 1.0);
      const Eigen::Vector3d s = m * x;
      if (!(std::abs(s.z()) > kProjectionEps)) {
        throw Error(ErrorCode::DegenerateProjection, "grid point maps to infinity");
      }
      const double inv_w = 1.0 / s.z();
      const double u = s.x() * inv_w;
      const double v = s.y() * inv_w;
      // u = s_x / s_z, v = s_y / s_z
      g.row(0) += gu * inv_w * x.transpose();
      g.row(1) += gv * inv_w * x.transpose();
      g.row(2) -= (gu * u + gv * v) * inv_w * x.transpose();
    }
  }
  return g;
}

Image bilinear_sample(const Image& img, const SampleGrid& grid) {
  const int ch = img.channels();
  Image out(grid.height(), grid.width(), ch);
  for (int i = 0; i < grid.height(); ++i) {
    for (int j = 0; j < grid.width(); ++j) {
      const double u = grid.u(i, j);
      const double v = grid.v(i, j);
      const int m0 = static_cast<int>(std::floor(u));
      const int n0 = static_cast<int>(std::floor(v));
      [[maybe_unused]] double weight_sum = 0.0;
      [[maybe_unused]] int taps = 0;
      for (int n = n0; n <= n0 + 1; ++n) {
        if (n < 0 || n >= img.height()) continue;
        const double wv = std::max(0.0, 1.0 - std::abs(v - n));
        for (int m = m0; m <= m0 + 1; ++m) {
          if (m < 0 || m >= img.width()) continue;
          const double w = std::max(0.0, 1.0 - std::abs(u - m)) * wv;
          weight_sum += w;
          ++taps;
          if (w == 0.0) continue;
          for (int c = 0; c < ch; ++c) out.at(i, j, c) += w * img.at(n, m, c);
        }
      }
      assert(taps < 4 || std::abs(weight_sum - 1.0) < 1e-9);
    }
  }
  return out;
}

BilinearGradient bilinear_backward(const Image& img, const SampleGrid& grid, const Image& grad_out) {
  if (grad_out.height() != grid.height() || grad_out.width() != grid.width() ||
      grad_out.channels() != img.channels()) {
    throw Error(ErrorCode::ShapeMismatch, "grad_out does not match the sampled output shape");
  }
  const int ch = img.channels();
  BilinearGradient out{Image(img.height(), img.width(), ch), SampleGrid(grid.height(), grid.width())};
  for (int i = 0; i < grid.height(); ++i) {
    for (int j = 0; j < grid.width(); ++j) {
      const double u = grid.u(i, j);
      const double v = grid.v(i, j);
      const int m0 = static_cast<int>(std::floor(u));
      const int n0 = static_cast<int>(std::floor(v));
      double gu = 0.0;
      double gv = 0.0;
      for (int n = n0; n <= n0 + 1; ++n) {
        if (n < 0 || n >= img.height()) continue;
        const double dn = std::abs(v - n);
        if (dn >= 1.0) continue;
        const double wv = 1.0 - dn;
        const double sv = n >= v ? 1.0 : -1.0;
        for (int m = m0; m <= m0 + 1; ++m) {
          if (m < 0 || m >= img.width()) continue;
          const double dm = std::abs(u - m);
          if (dm >= 1.0) continue;
          const double wu = 1.0 - dm;
          const double su = m >= u ? 1.0 : -1.0;
          for (int c = 0; c < ch; ++c) {
            const double go = grad_out.at(i, j, c);
            const double pix = img.at(n, m, c);
            out.grad_img.at(n, m, c) += go * wu * wv;
            gu += go * pix * wv * su;
            gv += go * pix * wu * sv;
          }
        }
      }
      out.grad_grid.u(i, j) = gu;
      out.grad_grid.v(i, j) = gv;
    }
  }
  return out;
}

Image warp_image(const Image& img, const Homography& h, int target_w, int target_h) {
  const Homography h_inv = normalized_inverse(h, target_w, target_h);
  return bilinear_sample(img, generate_grid(h_inv, target_w, target_h));
}

}  // namespace udh
