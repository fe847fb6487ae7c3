#pragma once

#include "udh/geom.hpp"
#include "udh/image.hpp"

namespace udh {

struct PhotometricResult {
  double loss = 0.0;
  Mat42 grad_delta = Mat42::Zero();  // dloss / d(corner offsets); zero unless requested
  Image warped;                      // image_a sampled at H(x) over the patch-B window
};

/// The differentiable post-network graph: offsets -> Tensor DLT -> projective
/// grid over the patch-B pixels (in image_a coordinates) -> bilinear sampling
/// of image_a -> mean L1 against patch_b, and its backward pass when
/// `with_grad` is set.
PhotometricResult photometric_objective(const Image& image_a, const CornerSet& corners_a,
                                        const Image& patch_b, const FourPointDelta& delta,
                                        bool with_grad);

}  // namespace udh
