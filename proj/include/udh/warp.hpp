#pragma once

#include <cstddef>
#include <vector>

#include "udh/geom.hpp"
#include "udh/image.hpp"

namespace udh {

/// Per-target-pixel source coordinates (u, v) in pixels of the sampled image.
class SampleGrid {
 public:
  SampleGrid() = default;
  SampleGrid(int height, int width)
      : height_(height), width_(width), coords_(static_cast<std::size_t>(height) * width * 2, 0.0) {}

  int height() const { return height_; }
  int width() const { return width_; }

  double& u(int y, int x) { return coords_[index(y, x)]; }
  double& v(int y, int x) { return coords_[index(y, x) + 1]; }
  double u(int y, int x) const { return coords_[index(y, x)]; }
  double v(int y, int x) const { return coords_[index(y, x) + 1]; }

  bool same_shape(const SampleGrid& o) const { return height_ == o.height_ && width_ == o.width_; }

 private:
  std::size_t index(int y, int x) const { return (static_cast<std::size_t>(y) * width_ + x) * 2; }

  int height_ = 0;
  int width_ = 0;
  std::vector<double> coords_;
};

struct BilinearGradient {
  Image grad_img;
  SampleGrid grad_grid;
};

/// M = [[w/2, 0, w/2], [0, h/2, h/2], [0, 0, 1]]: maps normalized [-1, 1]
/// coordinates to pixels, so x_norm = 2 x / w - 1.
Mat3 norm_matrix(int width, int height);

/// M^-1 h^-1 M for a target of the given size.
Homography normalized_inverse(const Homography& h, int target_w, int target_h);

/// Applies the normalized inverse to every target pixel and converts the
/// result back to pixel units.
SampleGrid generate_grid(const Homography& h_inv, int target_w, int target_h);

/// Pixel-space grid over the w x h region starting at (x0, y0):
/// coords(i, j) = project(map, (x0 + j, y0 + i)).
SampleGrid projective_grid(const Homography& map, int x0, int y0, int w, int h);

/// dL/dmap for projective_grid given dL/dcoords. All nine entries are filled.
Mat3 projective_grid_backward(const Homography& map, int x0, int y0, const SampleGrid& grad_grid);

/// Bilinear kernel sampling with zero contribution from pixels outside the image.
Image bilinear_sample(const Image& img, const SampleGrid& grid);

/// Gradients of sum(grad_out * bilinear_sample(img, grid)) with respect to
/// the image and the grid. Uses +1 for m >= u at kernel kinks.
BilinearGradient bilinear_backward(const Image& img, const SampleGrid& grid, const Image& grad_out);

/// Inverse warp: output(x) = img(h^-1 x), sampled on a target_w x target_h raster.
Image warp_image(const Image& img, const Homography& h, int target_w, int target_h);

}  // namespace udh
