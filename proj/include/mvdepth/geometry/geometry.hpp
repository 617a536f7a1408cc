#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mvdepth/core/camera.hpp"
#include "mvdepth/core/rng.hpp"
#include "mvdepth/core/types.hpp"

namespace mvdepth::geometry {

/// Points closer to the principal plane than this do not project.
inline constexpr double kZEpsilon = 1e-6;

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

struct Projection {
  double u = 0.0;
  double v = 0.0;
  bool valid = false;
};

/// Per-pixel source coordinates produced by re-projection. validity is false
/// wherever the point lands behind the source camera or outside
/// [0, W-1] x [0, H-1].
struct CorrespondenceGrid {
  int height = 0;
  int width = 0;
  std::vector<float> u;
  std::vector<float> v;
  std::vector<uint8_t> valid;

  CorrespondenceGrid() = default;
  CorrespondenceGrid(int height_, int width_)
      : height(height_), width(width_) {
    size_t n = static_cast<size_t>(height) * width;
    u.assign(n, 0.0f);
    v.assign(n, 0.0f);
    valid.assign(n, 0);
  }
  size_t index(int vy, int ux) const { return static_cast<size_t>(vy) * width + ux; }
};

struct GroundPlane {
  Point3 normal;          // unit
  double offset = 0.0;    // normal . p = offset for points on the plane
  double camera_height = 0.0;
  double inlier_ratio = 0.0;
};

struct OverfitResult {
  double depth = 0.0;
  double residual = 0.0;   // pixel distance at the optimum
  bool at_boundary = false;  // minimum sat on the search bracket edge
};

/// depth * K^-1 * [u, v, 1]^T. Throws std::domain_error for depth <= 0.
Point3 backproject(const Pixel& pixel, double depth, const CameraIntrinsics& intrinsics);

/// R*p + t + motion; the object displacement is additive after the rigid part.
Point3 transform_point(const Point3& p, const RigidPose& pose, const ObjectMotion& motion);

/// Perspective projection. Invalid (not an exception) when p.z <= kZEpsilon.
Projection project(const Point3& p, const CameraIntrinsics& intrinsics);

/// Per-pixel re-projection of the target grid into the source view:
/// project(transform(backproject(pixel, depth))). Bounds are tested against
/// the depth map's own dimensions.
CorrespondenceGrid warp_grid(const DepthMap& depth, const RigidPose& pose,
                             const CameraIntrinsics& intrinsics);

/// Bilinear interpolation of source at each valid grid cell. Invalid cells
/// produce 0 with mask false; outputs never leave the hull of the 4 neighbors.
std::pair<ImagePlane, BinaryMask> bilinear_sample(const ImagePlane& source,
                                                  const CorrespondenceGrid& grid);

/// The depth a static-world matcher converges to on a moving point: the
/// d in [true_depth/10, true_depth*10] whose static re-projection lands
/// nearest the true moved point's pixel. Coarse scan plus golden-section
/// refinement to 1e-6 relative bracket width.
OverfitResult overfit_depth(const Pixel& pixel, double true_depth, const RigidPose& pose,
                            const CameraIntrinsics& intrinsics, const ObjectMotion& motion);

/// RANSAC plane over points backprojected from the lower sample_region
/// fraction of the image, refit by least squares on the inliers.
/// Throws GroundFitError on < 3 points or inlier ratio < 0.2.
GroundPlane fit_ground_plane(const DepthMap& depth, const CameraIntrinsics& intrinsics,
                             double sample_region, Rng& rng);

}  // namespace mvdepth::geometry
