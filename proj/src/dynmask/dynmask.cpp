#include "mvdepth/dynmask/dynmask.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvdepth/core/rng.hpp"
#include "mvdepth/core/stats.hpp"

namespace mvdepth::dynmask {

namespace {

void require_same_shape(const DepthMap& a, const DepthMap& b,
                        const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(what) + ": depth dimensions differ");
  }
}

struct JointMedians {
  double median_over = 0.0;
  double median_ref = 0.0;
};

JointMedians joint_medians(const DepthMap& d_over, const DepthMap& d_ref) {
  std::vector<double> over;
  std::vector<double> ref;
  for (int v = 0; v < d_over.height; ++v) {
    for (int u = 0; u < d_over.width; ++u) {
      if (d_over.valid_at(v, u) && d_ref.valid_at(v, u)) {
        over.push_back(d_over.at(v, u));
        ref.push_back(d_ref.at(v, u));
      }
    }
  }
  if (over.empty()) {
    throw std::domain_error("median_align: no jointly valid pixels");
  }
  return {median_of(over), median_of(ref)};
}

}  // namespace

DepthMap median_align(const DepthMap& d_over, const DepthMap& d_ref) {
  require_same_shape(d_over, d_ref, "median_align");
  const JointMedians m = joint_medians(d_over, d_ref);
  const double scale = m.median_ref / m.median_over;
  DepthMap out = d_over;
  for (float& d : out.data) d = static_cast<float>(d * scale);
  return out;
}

std::pair<BinaryMask, BinaryMask> directional_masks(
    const DepthMap& d_over_aligned, const DepthMap& d_ref, double co_threshold,
    double con_threshold) {
  require_same_shape(d_over_aligned, d_ref, "directional_masks");
  if (!(co_threshold > 1.0)) {
    throw std::domain_error("directional_masks: co_threshold must exceed 1");
  }
  if (!(con_threshold < 1.0)) {
    throw std::domain_error("directional_masks: con_threshold must be below 1");
  }
  BinaryMask m_co(d_ref.height, d_ref.width);
  BinaryMask m_con(d_ref.height, d_ref.width);
  for (int v = 0; v < d_ref.height; ++v) {
    for (int u = 0; u < d_ref.width; ++u) {
      if (!d_over_aligned.valid_at(v, u) || !d_ref.valid_at(v, u)) continue;
      const double o = d_over_aligned.at(v, u);
      const double r = d_ref.at(v, u);
      m_co.set(v, u, o > co_threshold * r);
      m_con.set(v, u, o < con_threshold * r);
    }
  }
  return {m_co, m_con};
}

BinaryMask ground_mask(const DepthMap& d_ref,
                       const CameraIntrinsics& intrinsics,
                       const geometry::GroundPlane& plane) {
  if (!(plane.camera_height > 0.0)) {
    throw std::domain_error("ground_mask: camera height must be positive");
  }
  const double y_g = plane.camera_height;
  BinaryMask mask(d_ref.height, d_ref.width);
  for (int v = 0; v < d_ref.height; ++v) {
    for (int u = 0; u < d_ref.width; ++u) {
      if (!d_ref.valid_at(v, u)) continue;
      const double d = d_ref.at(v, u);
      if (!(d > 0.0)) continue;
      const Point3 p = geometry::backproject(
          {static_cast<double>(u), static_cast<double>(v)}, d, intrinsics);
      mask.set(v, u, p.y > -y_g && p.y < y_g);
    }
  }
  return mask;
}

BinaryMask inconsistency_mask(const BinaryMask& m_co, const BinaryMask& m_con,
                              const BinaryMask& m_ground) {
  if (!m_co.same_shape(m_con) || !m_co.same_shape(m_ground)) {
    throw DimensionError("inconsistency_mask: mask dimensions differ");
  }
  BinaryMask out(m_co.height, m_co.width);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] =
        ((m_co.data[i] != 0 || m_con.data[i] != 0) && m_ground.data[i] != 0)
            ? 1
            : 0;
  }
  return out;
}

MaskBundle generate_masks(const DepthMap& d_over, const DepthMap& d_ref,
                          const CameraIntrinsics& intrinsics,
                          double ground_region, std::uint64_t seed,
                          double co_threshold, double con_threshold) {
  require_same_shape(d_over, d_ref, "generate_masks");
  MaskBundle bundle;
  MaskProvenance& prov = bundle.provenance;
  prov.co_threshold = co_threshold;
  prov.con_threshold = con_threshold;

  const JointMedians medians = joint_medians(d_over, d_ref);
  prov.median_over = medians.median_over;
  prov.median_ref = medians.median_ref;
  prov.scale = medians.median_ref / medians.median_over;
  DepthMap aligned = d_over;
  for (float& d : aligned.data) d = static_cast<float>(d * prov.scale);

  auto [m_co, m_con] =
      directional_masks(aligned, d_ref, co_threshold, con_threshold);
  bundle.masks.m_co = std::move(m_co);
  bundle.masks.m_con = std::move(m_con);

  try {
    Rng rng(seed);
    const geometry::GroundPlane plane =
        geometry::fit_ground_plane(d_ref, intrinsics, ground_region, rng);
    if (!(plane.camera_height > 0.0)) {
      throw GroundFitError("ground plane passes through the camera center");
    }
    bundle.masks.m_ground = ground_mask(d_ref, intrinsics, plane);
    prov.ground_fit_ok = true;
    prov.y_g = plane.camera_height;
    prov.ground_inlier_ratio = plane.inlier_ratio;
  } catch (const GroundFitError&) {
    bundle.masks.m_ground = BinaryMask(d_ref.height, d_ref.width, true);
    prov.ground_fit_ok = false;
    prov.y_g = 0.0;
    prov.ground_inlier_ratio = 0.0;
  }

  bundle.masks.m_i = inconsistency_mask(bundle.masks.m_co, bundle.masks.m_con,
                                        bundle.masks.m_ground);
  return bundle;
}

nlohmann::json provenance_to_json(const MaskProvenance& provenance) {
  nlohmann::json j;
  j["y_g"] = provenance.y_g;
  j["median_over"] = provenance.median_over;
  j["median_ref"] = provenance.median_ref;
  j["scale"] = provenance.scale;
  j["co_threshold"] = provenance.co_threshold;
  j["con_threshold"] = provenance.con_threshold;
  j["ground_fit_ok"] = provenance.ground_fit_ok;
  j["ground_inlier_ratio"] = provenance.ground_inlier_ratio;
  return j;
}

}  // namespace mvdepth::dynmask
