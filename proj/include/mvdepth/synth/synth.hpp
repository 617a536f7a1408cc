#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvdepth/core/camera.hpp"
#include "mvdepth/core/types.hpp"

namespace mvdepth::synth {

/// Axis-aligned box, world frame, moving by pure translation per frame.
struct BoxSpec {
  Point3 center;              // at time 0
  Point3 size;                // full extents, all > 0
  ObjectMotion motion;        // world displacement per frame
  std::uint64_t texture_seed = 0;
};

/// Ground plane below the camera plus boxes resting in the world, textured
/// with deterministic 3D value noise. backdrop_z > 0 adds a far wall so
/// every forward ray hits something.
struct SceneSpec {
  double ground_height = 1.5;     // camera sits this far above the ground
  double texture_frequency = 1.0; // noise cycles per scene unit
  std::uint64_t ground_texture_seed = 0;
  double backdrop_z = 0.0;        // 0 = open sky
  std::vector<BoxSpec> boxes;
};

/// One ray-cast view: color, exact depth, and which object each pixel hit
/// (0 = ground/backdrop/sky, k = boxes[k-1]).
struct RenderedFrame {
  ImagePlane image;  // 3 channels in [0,1]
  DepthMap depth;    // invalid on sky pixels
  std::vector<int> object_id;

  int id_at(int v, int u) const {
    return object_id[static_cast<std::size_t>(v) * depth.width + u];
  }
};

/// Over-fit depth oracle output; ill-posed pixels carry the true depth.
struct OverfitDepthMap {
  DepthMap depth;
  BinaryMask ill_posed;
};

/// Throws std::domain_error when a scene violates its invariants
/// (nonpositive ground height, frequency, or box extents).
void validate_scene(const SceneSpec& scene);

/// Ray-cast the scene from a camera with the given world-to-camera pose.
/// Boxes are displaced by motion * time_delta first. Texture is a function
/// of the 3D surface point (box-local for boxes), so a static point keeps
/// its color from every view.
RenderedFrame render(const SceneSpec& scene, const RigidPose& pose,
                     const CameraIntrinsics& intrinsics, int height, int width,
                     double time_delta = 0.0);

/// The depth map a static-world photometric matcher would converge to for
/// the reference view (identity pose, time 0): true depth on static pixels,
/// the over-fit depth on moving-box pixels. Pixels whose solve ends on the
/// search boundary or misses by >= 0.5 px are flagged and keep true depth.
OverfitDepthMap overfit_depth_map(const SceneSpec& scene,
                                  const RigidPose& pose_t_to_prev,
                                  const CameraIntrinsics& intrinsics,
                                  int height, int width);

nlohmann::json scene_to_json(const SceneSpec& scene);
SceneSpec scene_from_json(const nlohmann::json& j);
SceneSpec read_scene_json(const std::string& path);
void write_scene_json(const std::string& path, const SceneSpec& scene);

/// Ground, far wall, one box moving with the camera and one against it.
SceneSpec default_demo_scene();

}  // namespace mvdepth::synth
