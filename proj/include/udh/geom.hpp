#pragma once

#include <array>

#include <Eigen/Core>

namespace udh {

using Vec2 = Eigen::Vector2d;
using Mat3 = Eigen::Matrix3d;
using Mat42 = Eigen::Matrix<double, 4, 2, Eigen::RowMajor>;

inline constexpr double kProjectionEps = 1e-12;
inline constexpr double kSingularDetEps = 1e-12;
inline constexpr double kCollinearAreaEps = 1e-9;
inline constexpr double kDltConditionLimit = 1e10;

/// Projective transform in pixel coordinates, stored with m(2,2) == 1.
class Homography {
 public:
  Homography() : m_(Mat3::Identity()) {}

  /// Rescales `m` so that m(2,2) == 1. Throws SingularHomography when the
  /// matrix is singular or its bottom-right entry cannot be normalized.
  static Homography from_matrix(const Mat3& m);

  static Homography identity() { return {}; }
  static Homography translation(double tx, double ty);

  const Mat3& matrix() const { return m_; }
  double operator()(int r, int c) const { return m_(r, c); }

 private:
  explicit Homography(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

/// Four corners ordered top-left, top-right, bottom-right, bottom-left.
struct CornerSet {
  std::array<Vec2, 4> pts;

  static CornerSet square(double x0, double y0, double size);
  static CornerSet rect(double x0, double y0, double width, double height);

  /// Smallest |area| over the four corner triples.
  double min_triangle_area() const;
  bool has_collinear_triple() const { return min_triangle_area() <= kCollinearAreaEps; }
};

/// Corner offsets (du_k, dv_k), one row per corner in CornerSet order.
struct FourPointDelta {
  Mat42 d = Mat42::Zero();

  static FourPointDelta zero() { return {}; }
  static FourPointDelta uniform(double du, double dv);
  static FourPointDelta from_flat(const double* values);  // 8 values, row-major

  double& operator()(int k, int axis) { return d(k, axis); }
  double operator()(int k, int axis) const { return d(k, axis); }
};

/// Per-coordinate gradients of a scalar loss with respect to both corner sets.
struct DltGradient {
  Mat42 src = Mat42::Zero();
  Mat42 dst = Mat42::Zero();
};

/// Applies h to a pixel coordinate. Throws DegenerateProjection when the
/// homogeneous denominator vanishes.
Vec2 project(const Homography& h, const Vec2& p);

CornerSet corners_plus_delta(const CornerSet& c, const FourPointDelta& d);

// Tensor DLT: with H33 pinned to 1 each correspondence contributes two rows
//   [ 0  0  0  -u  -v  -1   v'u   v'v ] h = -v'
//   [ u  v  1   0   0   0  -u'u  -u'v ] h =  u'
// and the stacked 8x8 system is solved directly by pivoted LU.
Homography dlt_solve(const CornerSet& src, const CornerSet& dst);

/// Backpropagates dL/dH (3x3; the (2,2) entry is ignored since H33 is fixed)
/// to the corner coordinates via dh = A^-1 (db - dA h).
DltGradient dlt_backward(const CornerSet& src, const CornerSet& dst, const Homography& h,
                         const Mat3& grad_h);

/// The composite 4-point to 3x3 layer: dlt_solve(c_a, c_a + d).
Homography h4pt_to_h(const CornerSet& c_a, const FourPointDelta& d);

Homography invert(const Homography& h);

}  // namespace udh
