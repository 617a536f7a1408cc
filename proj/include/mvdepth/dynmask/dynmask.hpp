#pragma once

#include <cstdint>
#include <utility>

#include <json.hpp>

#include "mvdepth/core/camera.hpp"
#include "mvdepth/core/types.hpp"
#include "mvdepth/geometry/geometry.hpp"

namespace mvdepth::dynmask {

/// The four depth-inconsistency rasters; m_i = (m_co OR m_con) AND m_ground.
struct InconsistencyMasks {
  BinaryMask m_co;
  BinaryMask m_con;
  BinaryMask m_ground;
  BinaryMask m_i;
};

/// Scalars recorded alongside the masks so a consumer can audit how they
/// were produced.
struct MaskProvenance {
  double y_g = 0.0;  // half-height of the ground band (fitted camera height)
  double median_over = 0.0;
  double median_ref = 0.0;
  double scale = 0.0;  // median_ref / median_over
  double co_threshold = 2.0;
  double con_threshold = 0.85;
  bool ground_fit_ok = false;
  double ground_inlier_ratio = 0.0;
};

struct MaskBundle {
  InconsistencyMasks masks;
  MaskProvenance provenance;
};

/// d_over rescaled so its median over jointly valid pixels matches d_ref's.
/// Throws std::domain_error when no pixel is valid in both maps.
DepthMap median_align(const DepthMap& d_over, const DepthMap& d_ref);

/// (m_co, m_con): depth blown past co_threshold * reference, and depth
/// collapsed under con_threshold * reference. Invalid pixels stay false.
/// Throws std::domain_error for co_threshold <= 1 or con_threshold >= 1.
std::pair<BinaryMask, BinaryMask> directional_masks(
    const DepthMap& d_over_aligned, const DepthMap& d_ref,
    double co_threshold = 2.0, double con_threshold = 0.85);

/// True where the backprojected camera-frame y of d_ref lies strictly inside
/// (-y_g, +y_g), y_g being the fitted camera height. Invalid pixels stay
/// false. Throws std::domain_error when the plane's camera_height is not > 0.
BinaryMask ground_mask(const DepthMap& d_ref,
                       const CameraIntrinsics& intrinsics,
                       const geometry::GroundPlane& plane);

/// (m_co OR m_con) AND m_ground.
BinaryMask inconsistency_mask(const BinaryMask& m_co, const BinaryMask& m_con,
                              const BinaryMask& m_ground);

/// Full pipeline: median alignment, directional masks, ground-plane fit on
/// d_ref, ground gate, composition. A failed ground fit degrades to an
/// all-true m_ground and is flagged in the provenance.
MaskBundle generate_masks(const DepthMap& d_over, const DepthMap& d_ref,
                          const CameraIntrinsics& intrinsics,
                          double ground_region = 1.0 / 3.0,
                          std::uint64_t seed = 0, double co_threshold = 2.0,
                          double con_threshold = 0.85);

nlohmann::json provenance_to_json(const MaskProvenance& provenance);

}  // namespace mvdepth::dynmask
