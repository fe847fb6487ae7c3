#include "udh/pipeline.hpp"

#include <cmath>

#include "udh/losses.hpp"
#include "udh/warp.hpp"

namespace udh {

PhotometricResult photometric_objective(const Image& image_a, const CornerSet& corners_a,
                                        const Image& patch_b, const FourPointDelta& delta,
                                        bool with_grad) {
  const int x0 = static_cast<int>(std::lround(corners_a.pts[0].x()));
  const int y0 = static_cast<int>(std::lround(corners_a.pts[0].y()));
  const Homography h = h4pt_to_h(corners_a, delta);
  const SampleGrid grid = projective_grid(h, x0, y0, patch_b.width(), patch_b.height());

  PhotometricResult out;
  out.warped = bilinear_sample(image_a, grid);
  const ImageLoss loss = photometric_loss(out.warped, patch_b);
  out.loss = loss.value;
  if (!with_grad) return out;

  const BilinearGradient bg = bilinear_backward(image_a, grid, loss.grad);
  const Mat3 grad_h = projective_grid_backward(h, x0, y0, bg.grad_grid);
  const CornerSet dst = corners_plus_delta(corners_a, delta);
  // The offsets only move the destination corners.
  out.grad_delta = dlt_backward(corners_a, dst, h, grad_h).dst;
  return out;
}

}  // namespace udh
