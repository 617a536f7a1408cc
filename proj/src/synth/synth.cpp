#include "mvdepth/synth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "mvdepth/core/io.hpp"
#include "mvdepth/geometry/geometry.hpp"

namespace mvdepth::synth {

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

double lattice_value(std::uint64_t seed, std::int64_t ix, std::int64_t iy,
                     std::int64_t iz) {
  std::uint64_t h = mix64(seed ^ static_cast<std::uint64_t>(ix));
  h = mix64(h ^ static_cast<std::uint64_t>(iy));
  h = mix64(h ^ static_cast<std::uint64_t>(iz));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double fade(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(const Point3& p, std::uint64_t seed) {
  const double fx = std::floor(p.x);
  const double fy = std::floor(p.y);
  const double fz = std::floor(p.z);
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iy = static_cast<std::int64_t>(fy);
  const auto iz = static_cast<std::int64_t>(fz);
  const double tx = fade(p.x - fx);
  const double ty = fade(p.y - fy);
  const double tz = fade(p.z - fz);
  double corners[2][2][2];
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx)
        corners[dz][dy][dx] = lattice_value(seed, ix + dx, iy + dy, iz + dz);
  auto lerp = [](double a, double b, double t) { return a + (b - a) * t; };
  const double z0 = lerp(lerp(corners[0][0][0], corners[0][0][1], tx),
                         lerp(corners[0][1][0], corners[0][1][1], tx), ty);
  const double z1 = lerp(lerp(corners[1][0][0], corners[1][0][1], tx),
                         lerp(corners[1][1][0], corners[1][1][1], tx), ty);
  return lerp(z0, z1, tz);
}

/// Two-octave value noise per channel, in [0,1].
void procedural_color(const Point3& p, double frequency, std::uint64_t seed,
                      float* rgb) {
  for (int c = 0; c < 3; ++c) {
    const std::uint64_t cs = mix64(seed ^ (static_cast<std::uint64_t>(c) + 1));
    const Point3 p1{p.x * frequency, p.y * frequency, p.z * frequency};
    const double f2 = 2.7 * frequency;
    const Point3 p2{p.x * f2 + 31.7, p.y * f2 + 12.3, p.z * f2 + 47.1};
    const double n =
        0.65 * value_noise(p1, cs) + 0.35 * value_noise(p2, mix64(cs));
    rgb[c] = static_cast<float>(std::clamp(n, 0.0, 1.0));
  }
}

struct Hit {
  double s = std::numeric_limits<double>::infinity();
  int object = 0;  // 0 ground/backdrop, k = box k
  bool found = false;
};

constexpr double kRayEpsilon = 1e-6;

void consider(Hit& best, double s, int object) {
  if (s > kRayEpsilon && s < best.s) {
    best.s = s;
    best.object = object;
    best.found = true;
  }
}

/// Slab intersection with [lo, hi]; entry parameter or no hit.
bool intersect_box(const Point3& origin, const Point3& dir, const Point3& lo,
                   const Point3& hi, double* entry) {
  double tmin = kRayEpsilon;
  double tmax = std::numeric_limits<double>::infinity();
  const double o[3] = {origin.x, origin.y, origin.z};
  const double d[3] = {dir.x, dir.y, dir.z};
  const double l[3] = {lo.x, lo.y, lo.z};
  const double h[3] = {hi.x, hi.y, hi.z};
  for (int axis = 0; axis < 3; ++axis) {
    if (std::abs(d[axis]) < 1e-12) {
      if (o[axis] < l[axis] || o[axis] > h[axis]) return false;
      continue;
    }
    double t0 = (l[axis] - o[axis]) / d[axis];
    double t1 = (h[axis] - o[axis]) / d[axis];
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
    if (tmin > tmax) return false;
  }
  *entry = tmin;
  return true;
}

}  // namespace

void validate_scene(const SceneSpec& scene) {
  if (!(scene.ground_height > 0.0) || !std::isfinite(scene.ground_height)) {
    throw std::domain_error("scene: ground_height must be positive");
  }
  if (!(scene.texture_frequency > 0.0) ||
      !std::isfinite(scene.texture_frequency)) {
    throw std::domain_error("scene: texture_frequency must be positive");
  }
  if (!(scene.backdrop_z >= 0.0) || !std::isfinite(scene.backdrop_z)) {
    throw std::domain_error("scene: backdrop_z must be >= 0");
  }
  for (const BoxSpec& box : scene.boxes) {
    if (!(box.size.x > 0.0) || !(box.size.y > 0.0) || !(box.size.z > 0.0)) {
      throw std::domain_error("scene: box sizes must be positive");
    }
  }
}

RenderedFrame render(const SceneSpec& scene, const RigidPose& pose,
                     const CameraIntrinsics& intrinsics, int height, int width,
                     double time_delta) {
  validate_scene(scene);
  RenderedFrame frame;
  frame.image = ImagePlane(height, width, 3, 0.5f);
  frame.depth = DepthMap(height, width);
  frame.object_id.assign(static_cast<std::size_t>(height) * width, 0);

  const RigidPose inv = pose.inverse();
  const Point3 origin{inv.translation[0], inv.translation[1],
                      inv.translation[2]};

  std::vector<Point3> box_lo(scene.boxes.size());
  std::vector<Point3> box_hi(scene.boxes.size());
  for (std::size_t k = 0; k < scene.boxes.size(); ++k) {
    const BoxSpec& box = scene.boxes[k];
    const Point3 c{box.center.x + box.motion.translation[0] * time_delta,
                   box.center.y + box.motion.translation[1] * time_delta,
                   box.center.z + box.motion.translation[2] * time_delta};
    box_lo[k] = {c.x - box.size.x / 2, c.y - box.size.y / 2,
                 c.z - box.size.z / 2};
    box_hi[k] = {c.x + box.size.x / 2, c.y + box.size.y / 2,
                 c.z + box.size.z / 2};
  }

  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      const Point3 dir_cam{(u - intrinsics.cx) / intrinsics.fx,
                           (v - intrinsics.cy) / intrinsics.fy, 1.0};
      const Point3 dir = inv.rotate(dir_cam);

      Hit best;
      if (dir.y > 1e-12) {
        consider(best, (scene.ground_height - origin.y) / dir.y, 0);
      }
      if (scene.backdrop_z > 0.0 && std::abs(dir.z) > 1e-12) {
        consider(best, (scene.backdrop_z - origin.z) / dir.z, 0);
      }
      for (std::size_t k = 0; k < scene.boxes.size(); ++k) {
        double entry = 0.0;
        if (intersect_box(origin, dir, box_lo[k], box_hi[k], &entry)) {
          consider(best, entry, static_cast<int>(k) + 1);
        }
      }
      if (!best.found) continue;

      const Point3 p_world{origin.x + best.s * dir.x,
                           origin.y + best.s * dir.y,
                           origin.z + best.s * dir.z};
      Point3 p_tex = p_world;
      std::uint64_t seed = scene.ground_texture_seed;
      if (best.object > 0) {
        const BoxSpec& box = scene.boxes[best.object - 1];
        p_tex = {p_world.x - (box_lo[best.object - 1].x + box_hi[best.object - 1].x) / 2,
                 p_world.y - (box_lo[best.object - 1].y + box_hi[best.object - 1].y) / 2,
                 p_world.z - (box_lo[best.object - 1].z + box_hi[best.object - 1].z) / 2};
        seed = box.texture_seed;
      }
      procedural_color(p_tex, scene.texture_frequency, seed,
                       &frame.image.at(v, u, 0));
      frame.depth.set(v, u, static_cast<float>(best.s));
      frame.object_id[static_cast<std::size_t>(v) * width + u] = best.object;
    }
  }
  return frame;
}

OverfitDepthMap overfit_depth_map(const SceneSpec& scene,
                                  const RigidPose& pose_t_to_prev,
                                  const CameraIntrinsics& intrinsics,
                                  int height, int width) {
  const RenderedFrame frame =
      render(scene, RigidPose::identity(), intrinsics, height, width, 0.0);
  OverfitDepthMap out;
  out.depth = frame.depth;
  out.ill_posed = BinaryMask(height, width);

  std::vector<ObjectMotion> motions_cam;
  motions_cam.reserve(scene.boxes.size());
  for (const BoxSpec& box : scene.boxes) {
    // world displacement m becomes -R*m seen from the previous camera
    const Point3 rm = pose_t_to_prev.rotate(
        {box.motion.translation[0], box.motion.translation[1],
         box.motion.translation[2]});
    motions_cam.push_back(ObjectMotion(-rm.x, -rm.y, -rm.z));
  }

  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      const int id = frame.id_at(v, u);
      if (id == 0 || !frame.depth.valid_at(v, u)) continue;
      if (scene.boxes[id - 1].motion.is_zero()) continue;
      const double true_depth = frame.depth.at(v, u);
      bool posed = false;
      try {
        const geometry::OverfitResult result = geometry::overfit_depth(
            {static_cast<double>(u), static_cast<double>(v)}, true_depth,
            pose_t_to_prev, intrinsics, motions_cam[id - 1]);
        if (!result.at_boundary && result.residual < 0.5) {
          out.depth.set(v, u, static_cast<float>(result.depth));
          posed = true;
        }
      } catch (const std::domain_error&) {
        // moved point projects nowhere; fall through to the flag
      }
      if (!posed) out.ill_posed.set(v, u, true);
    }
  }
  return out;
}

nlohmann::json scene_to_json(const SceneSpec& scene) {
  nlohmann::json j;
  j["ground_height"] = scene.ground_height;
  j["texture_frequency"] = scene.texture_frequency;
  j["ground_texture_seed"] = scene.ground_texture_seed;
  j["backdrop_z"] = scene.backdrop_z;
  j["boxes"] = nlohmann::json::array();
  for (const BoxSpec& box : scene.boxes) {
    nlohmann::json b;
    b["center"] = {box.center.x, box.center.y, box.center.z};
    b["size"] = {box.size.x, box.size.y, box.size.z};
    b["motion"] = {box.motion.translation[0], box.motion.translation[1],
                   box.motion.translation[2]};
    b["texture_seed"] = box.texture_seed;
    j["boxes"].push_back(b);
  }
  return j;
}

SceneSpec scene_from_json(const nlohmann::json& j) {
  SceneSpec scene;
  try {
    scene.ground_height = j.at("ground_height").get<double>();
    scene.texture_frequency = j.at("texture_frequency").get<double>();
    scene.ground_texture_seed =
        j.value("ground_texture_seed", std::uint64_t{0});
    scene.backdrop_z = j.value("backdrop_z", 0.0);
    for (const nlohmann::json& b : j.value("boxes", nlohmann::json::array())) {
      BoxSpec box;
      const auto center = b.at("center").get<std::vector<double>>();
      const auto size = b.at("size").get<std::vector<double>>();
      const auto motion = b.at("motion").get<std::vector<double>>();
      if (center.size() != 3 || size.size() != 3 || motion.size() != 3) {
        throw IoError("scene: center, size and motion must have 3 entries");
      }
      box.center = {center[0], center[1], center[2]};
      box.size = {size[0], size[1], size[2]};
      box.motion = ObjectMotion(motion[0], motion[1], motion[2]);
      box.texture_seed = b.value("texture_seed", std::uint64_t{0});
      scene.boxes.push_back(box);
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("scene: bad JSON structure (") + e.what() + ")");
  }
  validate_scene(scene);
  return scene;
}

SceneSpec read_scene_json(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path + ": not valid JSON (" + e.what() + ")");
  }
  return scene_from_json(j);
}

void write_scene_json(const std::string& path, const SceneSpec& scene) {
  io::write_text_file(path, scene_to_json(scene).dump(2) + "\n");
}

SceneSpec default_demo_scene() {
  SceneSpec scene;
  scene.ground_height = 1.5;
  scene.texture_frequency = 0.8;
  scene.ground_texture_seed = 11;
  scene.backdrop_z = 40.0;

  BoxSpec with_camera;  // drifts forward with the camera: depth over-fits deep
  with_camera.center = {-1.2, 0.9, 6.0};
  with_camera.size = {1.2, 1.2, 1.2};
  with_camera.motion = ObjectMotion(0.0, 0.0, 0.36);
  with_camera.texture_seed = 101;
  scene.boxes.push_back(with_camera);

  BoxSpec against_camera;  // approaches the camera: depth over-fits shallow
  against_camera.center = {1.2, 0.9, 6.0};
  against_camera.size = {1.2, 1.2, 1.2};
  against_camera.motion = ObjectMotion(0.0, 0.0, -0.36);
  against_camera.texture_seed = 202;
  scene.boxes.push_back(against_camera);
  return scene;
}

}  // namespace mvdepth::synth
