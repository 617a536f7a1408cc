#pragma once

#include <vector>

#include "mvdepth/core/types.hpp"

namespace mvdepth::photometric {

/// Single-channel ImagePlane of nonnegative per-pixel loss values.
using LossMap = ImagePlane;

/// Per-pixel SSIM over a 3x3 uniform window with reflect padding,
/// C1 = 0.01^2, C2 = 0.03^2. Per-channel SSIM averaged across channels;
/// output is a single-channel plane in [-1, 1].
ImagePlane ssim(const ImagePlane& a, const ImagePlane& b);

/// alpha/2 * (1 - SSIM) + (1 - alpha) * mean-over-channels |target - recon|.
/// Throws std::domain_error for alpha outside [0, 1].
LossMap photometric_error(const ImagePlane& target, const ImagePlane& recon,
                          double alpha = 0.85);

/// Elementwise minimum over source losses. Throws std::domain_error on an
/// empty list.
LossMap min_reprojection(const std::vector<LossMap>& losses);

/// Edge-aware smoothness of mean-normalized inverse depth: mean over the
/// interior of |dx d^| e^{-|dx I|} + |dy d^| e^{-|dy I|}, forward differences,
/// image gradients averaged over channels. All depths must be valid and > 0.
double smoothness(const DepthMap& depth, const ImagePlane& image);

}  // namespace mvdepth::photometric
