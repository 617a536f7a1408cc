#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mvdepth/core/types.hpp"

namespace mvdepth::fusion {

enum class Activation {
  kElu,
  kLinear,  // bypass, used by projection shortcuts and linearity checks
};

/// One 3x3 convolution block. Kernel layout:
/// kernels[((ky * 3 + kx) * in_channels + ci) * out_channels + co].
/// 1x1 projections are expressed as center-only 3x3 kernels, which is exact
/// under zero padding.
struct ConvBlockWeights {
  int in_channels = 0;
  int out_channels = 0;
  int stride = 1;
  Activation activation = Activation::kElu;
  std::vector<float> kernels;
  std::vector<float> biases;
};

/// The five blocks of the fusion head, in forward order.
struct FusionWeights {
  ConvBlockWeights conv_f1;         // stride 2 over F_1
  ConvBlockWeights conv_merge;      // stride 1 over conv_f1(F_1) cat F_2
  ConvBlockWeights res_conv1;       // stride 2 over F_2
  ConvBlockWeights res_conv2;       // stride 1
  ConvBlockWeights res_projection;  // stride 2 linear shortcut over F_2
};

/// Fusion outputs, all at F_2 resolution. fms concatenates F_2, f12, f32
/// in that channel order.
struct FusedFeatures {
  ImagePlane f12;
  ImagePlane f32;
  ImagePlane fms;
};

/// 3x3 convolution with zero padding 1, the block's stride, bias, then
/// activation. Output spatial dims are ceil(input / stride). Accumulates in
/// double per output element, so results do not depend on traversal order.
ImagePlane conv2d_forward(const ImagePlane& input,
                          const ConvBlockWeights& weights);

/// conv(stride 2) -> conv(stride 1), plus a stride-2 projection shortcut;
/// the shortcut joins after the second activation and nothing follows the sum.
ImagePlane resblock_forward(
    const ImagePlane& input,
    const std::pair<ConvBlockWeights, ConvBlockWeights>& convs,
    const ConvBlockWeights& projection);

/// 2x bilinear upsample, align-corners-false, edges clamped.
ImagePlane upsample_bilinear_2x(const ImagePlane& input);

/// F_12 = conv_merge(conv_f1(f1) cat f2); F_32 = 2x upsample of the
/// residual block over f2; F_ms = f2 cat F_12 cat F_32. f1 must be exactly
/// twice f2's spatial size.
FusedFeatures msfusion_forward(const ImagePlane& f1, const ImagePlane& f2,
                               const FusionWeights& weights);

/// Deterministic random weights: normal kernels scaled by sqrt(2 / fan_in),
/// zero biases, ELU everywhere except the linear projection.
FusionWeights random_fusion_weights(std::uint64_t seed, int c1, int c2,
                                    int width = 64);

/// Flat little-endian float32 blob (kernels then biases, blocks in forward
/// order) plus a JSON manifest describing every block's shape.
void save_fusion_weights(const FusionWeights& weights,
                         const std::string& blob_path,
                         const std::string& json_path);
FusionWeights load_fusion_weights(const std::string& blob_path,
                                  const std::string& json_path);

}  // namespace mvdepth::fusion
