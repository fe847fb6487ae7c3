#include "udh/geom.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/LU>

#include "udh/error.hpp"

namespace udh {

namespace {

using Mat8 = Eigen::Matrix<double, 8, 8>;
using Vec8 = Eigen::Matrix<double, 8, 1>;

double triangle_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
}

void build_system(const CornerSet& src, const CornerSet& dst, Mat8& a, Vec8& b) {
  for (int i = 0; i < 4; ++i) {
    const double u = src.pts[i].x(), v = src.pts[i].y();
    const double up = dst.pts[i].x(), vp = dst.pts[i].y();
    a.row(2 * i) << 0, 0, 0, -u, -v, -1, vp * u, vp * v;
    a.row(2 * i + 1) << u, v, 1, 0, 0, 0, -up * u, -up * v;
    b(2 * i) = -vp;
    b(2 * i + 1) = up;
  }
}

struct Factored {
  Eigen::PartialPivLU<Mat8> lu;
  Vec8 h;
};

Factored factor_and_solve(const CornerSet& src, const CornerSet& dst) {
  if (src.has_collinear_triple()) {
    throw Error(ErrorCode::CollinearCorners, "source corners contain a collinear triple");
  }
  if (dst.has_collinear_triple()) {
    throw Error(ErrorCode::CollinearCorners, "destination corners contain a collinear triple");
  }
  Mat8 a;
  Vec8 b;
  build_system(src, dst, a, b);
  Factored f{Eigen::PartialPivLU<Mat8>(a), Vec8::Zero()};

  const auto diag = f.lu.matrixLU().diagonal().cwiseAbs();
  const double lo = diag.minCoeff();
  const double hi = diag.maxCoeff();
  if (!(lo > 0.0) || hi / lo > kDltConditionLimit) {
    throw Error(ErrorCode::IllConditionedSystem,
                "DLT system condition estimate " + std::to_string(lo > 0.0 ? hi / lo : INFINITY));
  }
  f.h = f.lu.solve(b);
  return f;
}

}  // namespace

Homography Homography::from_matrix(const Mat3& m) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::SingularHomography, "non-finite matrix entries");
  }
  if (std::abs(m(2, 2)) <= kSingularDetEps) {
    throw Error(ErrorCode::SingularHomography, "bottom-right entry cannot be normalized to 1");
  }
  Mat3 n = m / m(2, 2);
  n(2, 2) = 1.0;
  if (std::abs(n.determinant()) <= kSingularDetEps) {
    throw Error(ErrorCode::SingularHomography, "determinant below threshold");
  }
  return Homography(n);
}

Homography Homography::translation(double tx, double ty) {
  Mat3 m = Mat3::Identity();
  m(0, 2) = tx;
  m(1, 2) = ty;
  return Homography(m);
}

CornerSet CornerSet::square(double x0, double y0, double size) { return rect(x0, y0, size, size); }

CornerSet CornerSet::rect(double x0, double y0, double width, double height) {
  return {{Vec2(x0, y0), Vec2(x0 + width, y0), Vec2(x0 + width, y0 + height),
           Vec2(x0, y0 + height)}};
}

double CornerSet::min_triangle_area() const {
  double best = INFINITY;
  for (int skip = 0; skip < 4; ++skip) {
    std::array<int, 3> idx{};
    int n = 0;
    for (int k = 0; k < 4; ++k) {
      if (k != skip) idx[n++] = k;
    }
    const double area = std::abs(triangle_area(pts[idx[0]], pts[idx[1]], pts[idx[2]]));
    best = std::min(best, std::isnan(area) ? 0.0 : area);
  }
  return best;
}

FourPointDelta FourPointDelta::uniform(double du, double dv) {
  FourPointDelta out;
  out.d.col(0).setConstant(du);
  out.d.col(1).setConstant(dv);
  return out;
}

FourPointDelta FourPointDelta::from_flat(const double* values) {
  FourPointDelta out;
  for (int i = 0; i < 8; ++i) out.d(i / 2, i % 2) = values[i];
  return out;
}

Vec2 project(const Homography& h, const Vec2& p) {
  const Mat3& m = h.matrix();
  const double den = m(2, 0) * p.x() + m(2, 1) * p.y() + m(2, 2);
  if (!(std::abs(den) > kProjectionEps)) {
    throw Error(ErrorCode::DegenerateProjection, "projective denominator vanishes");
  }
  return {(m(0, 0) * p.x() + m(0, 1) * p.y() + m(0, 2)) / den,
          (m(1, 0) * p.x() + m(1, 1) * p.y() + m(1, 2)) / den};
}

CornerSet corners_plus_delta(const CornerSet& c, const FourPointDelta& d) {
  CornerSet out = c;
  for (int k = 0; k < 4; ++k) {
    out.pts[k] += Vec2(d(k, 0), d(k, 1));
  }
  return out;
}

Homography dlt_solve(const CornerSet& src, const CornerSet& dst) {
  const Factored f = factor_and_solve(src, dst);
  Mat3 m;
  m << f.h(0), f.h(1), f.h(2), f.h(3), f.h(4), f.h(5), f.h(6), f.h(7), 1.0;
  return Homography::from_matrix(m);
}

DltGradient dlt_backward(const CornerSet& src, const CornerSet& dst, const Homography& h,
                         const Mat3& grad_h) {
  const Factored f = factor_and_solve(src, dst);
  Vec8 g;
  g << grad_h(0, 0), grad_h(0, 1), grad_h(0, 2), grad_h(1, 0), grad_h(1, 1), grad_h(1, 2),
      grad_h(2, 0), grad_h(2, 1);

  // lambda = A^-T g, then dL/dtheta = lambda^T (db/dtheta - dA/dtheta h).
  const Vec8 lambda = f.lu.transpose().solve(g);
  const Mat3& m = h.matrix();
  const double h1 = m(0, 0), h2 = m(0, 1), h4 = m(1, 0), h5 = m(1, 1), h7 = m(2, 0), h8 = m(2, 1);

  DltGradient out;
  for (int i = 0; i < 4; ++i) {
    const double u = src.pts[i].x(), v = src.pts[i].y();
    const double up = dst.pts[i].x(), vp = dst.pts[i].y();
    const double l1 = lambda(2 * i), l2 = lambda(2 * i + 1);
    const double w = 1.0 + u * h7 + v * h8;
    // residual r1 = -v' w + (u h4 + v h5 + h6); r2 = u' w - (u h1 + v h2 + h3)
    out.src(i, 0) = l1 * (h4 - vp * h7) + l2 * (up * h7 - h1);
    out.src(i, 1) = l1 * (h5 - vp * h8) + l2 * (up * h8 - h2);
    out.dst(i, 0) = l2 * w;
    out.dst(i, 1) = -l1 * w;
  }
  return out;
}

Homography h4pt_to_h(const CornerSet& c_a, const FourPointDelta& d) {
  // The zero offset is the layer's fixed point; return it exactly rather than via the solve.
  if (d.d.isZero(0.0)) {
    if (c_a.has_collinear_triple()) {
      throw Error(ErrorCode::CollinearCorners, "source corners contain a collinear triple");
    }
    return Homography::identity();
  }
  return dlt_solve(c_a, corners_plus_delta(c_a, d));
}

Homography invert(const Homography& h) {
  const Mat3& m = h.matrix();
  if (std::abs(m.determinant()) <= kSingularDetEps) {
    throw Error(ErrorCode::SingularHomography, "cannot invert a singular homography");
  }
  return Homography::from_matrix(m.inverse());
}

}  // namespace udh
