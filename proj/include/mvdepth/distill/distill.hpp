#pragma once

#include <cstdint>

#include <json.hpp>

#include "mvdepth/costvolume/costvolume.hpp"
#include "mvdepth/core/types.hpp"
#include "mvdepth/photometric/photometric.hpp"

namespace mvdepth::distill {

using photometric::LossMap;

/// The five loss components and their composition. l_ph / l_ph_s are the
/// already-gated photometric means; l_sm / l_sm_s are raw smoothness values
/// weighted by beta inside `total`.
struct LossBreakdown {
  double l_ph = 0.0;
  double l_c = 0.0;
  double l_sm = 0.0;
  double l_ph_s = 0.0;
  double l_sm_s = 0.0;
  double beta = 1e-3;
  double total = 0.0;
  std::size_t gate_multi_count = 0;   // pixels feeding l_ph
  std::size_t gate_single_count = 0;  // pixels feeding l_ph_s
};

/// How consistency_loss aggregates the gated residuals.
enum class LossNorm {
  kMean,  // divide by the raster's total pixel count
  kSum,   // raw sum
};

/// True where the single-frame photometric loss is strictly below the
/// multi-frame one.
BinaryMask robust_mask(const LossMap& l_ph_single, const LossMap& l_ph_multi);

/// |d_multi - d_single| summed over gate-true pixels valid in both maps,
/// divided by the total pixel count under kMean.
double consistency_loss(const DepthMap& d_multi, const DepthMap& d_single,
                        const BinaryMask& gate, LossNorm norm = LossNorm::kMean);

/// Augmented samples gate with m AND m_r; non-augmented samples use m alone.
/// Throws std::domain_error when augmented is true but m_r is null.
BinaryMask compose_gate(const BinaryMask& m, const BinaryMask* m_r,
                        bool augmented);

/// Per-channel affine color jitter (gain within strength*10% of 1, bias
/// within strength*0.05 of 0), clamped to [0,1], deterministic in the seed.
/// strength 0 returns an exact copy.
ImagePlane static_frame_augment(const ImagePlane& target,
                                std::uint64_t jitter_seed,
                                double strength = 1.0);

/// Same shape, every cost zero, every cell valid.
costvolume::CostVolume zero_cost_volume_augment(
    const costvolume::CostVolume& volume);

/// Final training loss: mean of l_ph over pixels outside both m and m_i,
/// plus l_c, plus beta * l_sm, plus mean of l_ph_s outside m_i, plus
/// beta * l_sm_s.
LossBreakdown total_loss(const LossMap& l_ph, const LossMap& l_ph_s,
                         const BinaryMask& m, const BinaryMask& m_i,
                         double l_c, double l_sm, double l_sm_s,
                         double beta = 1e-3);

nlohmann::json breakdown_to_json(const LossBreakdown& breakdown);

}  // namespace mvdepth::distill
