#include "mvdepth/geometry/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mvdepth/core/stats.hpp"

namespace mvdepth::geometry {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Point3 backproject(const Pixel& pixel, double depth, const CameraIntrinsics& k) {
  if (!(depth > 0.0)) {
    throw std::domain_error("backproject: depth must be positive");
  }
  return {(pixel.u - k.cx) / k.fx * depth, (pixel.v - k.cy) / k.fy * depth, depth};
}

Point3 transform_point(const Point3& p, const RigidPose& pose, const ObjectMotion& motion) {
  Point3 q = pose.apply(p);
  return {q.x + motion.translation[0], q.y + motion.translation[1],
          q.z + motion.translation[2]};
}

Projection project(const Point3& p, const CameraIntrinsics& k) {
  Projection out;
  if (p.z <= kZEpsilon) return out;
  out.u = k.fx * p.x / p.z + k.cx;
  out.v = k.fy * p.y / p.z + k.cy;
  out.valid = true;
  return out;
}

CorrespondenceGrid warp_grid(const DepthMap& depth, const RigidPose& pose,
                             const CameraIntrinsics& k) {
  CorrespondenceGrid grid(depth.height, depth.width);
  const double u_max = depth.width - 1.0;
  const double v_max = depth.height - 1.0;
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      size_t i = grid.index(v, u);
      if (!depth.valid_at(v, u)) continue;
      double d = depth.at(v, u);
      if (!(d > 0.0)) continue;
      Point3 p = transform_point(backproject({double(u), double(v)}, d, k), pose,
                                 ObjectMotion::zero());
      Projection q = project(p, k);
      if (!q.valid) continue;
      // A target that lands exactly on the frame edge can round a hair past
      // it; tolerate that and clamp, so edge pixels stay usable.
      constexpr double kEdgeSlack = 1e-6;
      if (q.u < -kEdgeSlack || q.u > u_max + kEdgeSlack || q.v < -kEdgeSlack ||
          q.v > v_max + kEdgeSlack) {
        continue;
      }
      grid.u[i] = static_cast<float>(std::clamp(q.u, 0.0, u_max));
      grid.v[i] = static_cast<float>(std::clamp(q.v, 0.0, v_max));
      grid.valid[i] = 1;
    }
  }
  return grid;
}

std::pair<ImagePlane, BinaryMask> bilinear_sample(const ImagePlane& source,
                                                  const CorrespondenceGrid& grid) {
  ImagePlane out(grid.height, grid.width, source.channels, 0.0f);
  BinaryMask mask(grid.height, grid.width, false);
  const double u_max = source.width - 1.0;
  const double v_max = source.height - 1.0;
  for (int v = 0; v < grid.height; ++v) {
    for (int u = 0; u < grid.width; ++u) {
      size_t i = grid.index(v, u);
      if (!grid.valid[i]) continue;
      double su = grid.u[i];
      double sv = grid.v[i];
      if (su < 0.0 || su > u_max || sv < 0.0 || sv > v_max) continue;
      int x0 = static_cast<int>(su);
      int y0 = static_cast<int>(sv);
      int x1 = std::min(x0 + 1, source.width - 1);
      int y1 = std::min(y0 + 1, source.height - 1);
      double fx = su - x0;
      double fy = sv - y0;
      for (int c = 0; c < source.channels; ++c) {
        double top = (1.0 - fx) * source.at(y0, x0, c) + fx * source.at(y0, x1, c);
        double bot = (1.0 - fx) * source.at(y1, x0, c) + fx * source.at(y1, x1, c);
        out.at(v, u, c) = static_cast<float>((1.0 - fy) * top + fy * bot);
      }
      mask.set(v, u, true);
    }
  }
  return {std::move(out), std::move(mask)};
}

namespace {

// Pixel distance between the static re-projection at depth d and the target
// pixel; +inf when the hypothesis does not project.
double static_residual(const Pixel& pixel, double d, const RigidPose& pose,
                       const CameraIntrinsics& k, const Projection& target) {
  Point3 p = transform_point(backproject(pixel, d, k), pose, ObjectMotion::zero());
  Projection q = project(p, k);
  if (!q.valid) return kInf;
  double du = q.u - target.u;
  double dv = q.v - target.v;
  return std::sqrt(du * du + dv * dv);
}

}  // namespace

OverfitResult overfit_depth(const Pixel& pixel, double true_depth, const RigidPose& pose,
                            const CameraIntrinsics& k, const ObjectMotion& motion) {
  if (!(true_depth > 0.0)) {
    throw std::domain_error("overfit_depth: true_depth must be positive");
  }
  Point3 moved = transform_point(backproject(pixel, true_depth, k), pose, motion);
  Projection target = project(moved, k);
  if (!target.valid) {
    throw std::domain_error("overfit_depth: true moved point does not project in the source view");
  }

  const double d_lo = true_depth / 10.0;
  const double d_hi = true_depth * 10.0;

  // Coarse log-spaced scan to bracket the minimum; the residual is not
  // guaranteed unimodal over the whole two-decade range.
  constexpr int kScan = 256;
  const double log_lo = std::log(d_lo);
  const double log_step = (std::log(d_hi) - log_lo) / (kScan - 1);
  int best = -1;
  double best_res = kInf;
  for (int i = 0; i < kScan; ++i) {
    double d = std::exp(log_lo + i * log_step);
    double r = static_residual(pixel, d, pose, k, target);
    if (r < best_res) {
      best_res = r;
      best = i;
    }
  }
  if (best < 0) {
    throw std::domain_error("overfit_depth: no depth hypothesis projects in the source view");
  }

  bool at_boundary = (best == 0 || best == kScan - 1);
  double a = std::exp(log_lo + std::max(best - 1, 0) * log_step);
  double b = std::exp(log_lo + std::min(best + 1, kScan - 1) * log_step);

  // Golden-section on [a, b] to 1e-6 relative width.
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = static_residual(pixel, x1, pose, k, target);
  double f2 = static_residual(pixel, x2, pose, k, target);
  while ((b - a) > 1e-6 * b) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = static_residual(pixel, x1, pose, k, target);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = static_residual(pixel, x2, pose, k, target);
    }
  }
  double d_star = 0.5 * (a + b);
  double res = static_residual(pixel, d_star, pose, k, target);
  if (f1 < res) {
    d_star = x1;
    res = f1;
  }
  if (f2 < res) {
    d_star = x2;
    res = f2;
  }
  return {d_star, res, at_boundary};
}

namespace {

struct PlaneModel {
  Point3 normal;   // unit
  double offset;   // normal . p
};

// Least-squares plane: centroid plus smallest-eigenvector of the scatter
// matrix, via cyclic Jacobi on the symmetric 3x3.
PlaneModel fit_plane_lsq(const std::vector<Point3>& points, const std::vector<int>& idx) {
  Point3 c{0, 0, 0};
  for (int i : idx) c = c + points[i];
  double inv_n = 1.0 / idx.size();
  c = inv_n * c;
  double m[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  for (int i : idx) {
    Point3 d = points[i] - c;
    double v[3] = {d.x, d.y, d.z};
    for (int r = 0; r < 3; ++r)
      for (int s = 0; s < 3; ++s) m[r][s] += v[r] * v[s];
  }
  double vecs[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  for (int sweep = 0; sweep < 32; ++sweep) {
    double off = std::abs(m[0][1]) + std::abs(m[0][2]) + std::abs(m[1][2]);
    if (off < 1e-15) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (std::abs(m[p][q]) < 1e-18) continue;
        double theta = 0.5 * std::atan2(2.0 * m[p][q], m[q][q] - m[p][p]);
        double cs = std::cos(theta), sn = std::sin(theta);
        for (int r = 0; r < 3; ++r) {
          double mp = m[r][p], mq = m[r][q];
          m[r][p] = cs * mp - sn * mq;
          m[r][q] = sn * mp + cs * mq;
        }
        for (int s = 0; s < 3; ++s) {
          double mp = m[p][s], mq = m[q][s];
          m[p][s] = cs * mp - sn * mq;
          m[q][s] = sn * mp + cs * mq;
        }
        for (int r = 0; r < 3; ++r) {
          double vp = vecs[r][p], vq = vecs[r][q];
          vecs[r][p] = cs * vp - sn * vq;
          vecs[r][q] = sn * vp + cs * vq;
        }
      }
    }
  }
  int smallest = 0;
  for (int i = 1; i < 3; ++i)
    if (m[i][i] < m[smallest][smallest]) smallest = i;
  Point3 n{vecs[0][smallest], vecs[1][smallest], vecs[2][smallest]};
  double len = norm(n);
  n = (1.0 / len) * n;
  double offset = dot(n, c);
  if (offset < 0.0) {
    n = -1.0 * n;
    offset = -offset;
  }
  return {n, offset};
}

}  // namespace

GroundPlane fit_ground_plane(const DepthMap& depth, const CameraIntrinsics& k,
                             double sample_region, Rng& rng) {
  if (!(sample_region > 0.0 && sample_region <= 1.0)) {
    throw std::domain_error("fit_ground_plane: sample_region must be in (0, 1]");
  }
  int v_start = depth.height - std::max(1, static_cast<int>(std::ceil(depth.height * sample_region)));
  std::vector<Point3> points;
  std::vector<double> depths;
  for (int v = v_start; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      if (!depth.valid_at(v, u)) continue;
      double d = depth.at(v, u);
      points.push_back(backproject({double(u), double(v)}, d, k));
      depths.push_back(d);
    }
  }
  if (points.size() < 3) {
    throw GroundFitError("fit_ground_plane: fewer than 3 valid points in the sample region");
  }

  const double inlier_thresh = 0.01 * median_of(depths);
  constexpr int kIterations = 200;
  size_t best_count = 0;
  PlaneModel best_model{{0, 1, 0}, 0};
  const uint32_t n = static_cast<uint32_t>(points.size());
  for (int it = 0; it < kIterations; ++it) {
    uint32_t a = rng.uniform_index(n);
    uint32_t b = rng.uniform_index(n);
    uint32_t c = rng.uniform_index(n);
    if (a == b || a == c || b == c) continue;
    Point3 nvec = cross(points[b] - points[a], points[c] - points[a]);
    double len = norm(nvec);
    if (len < 1e-12) continue;
    nvec = (1.0 / len) * nvec;
    double off = dot(nvec, points[a]);
    size_t count = 0;
    for (const Point3& p : points) {
      if (std::abs(dot(nvec, p) - off) <= inlier_thresh) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best_model = {nvec, off};
    }
  }

  double ratio = static_cast<double>(best_count) / points.size();
  if (best_count < 3 || ratio < 0.2) {
    throw GroundFitError("fit_ground_plane: inlier ratio " + std::to_string(ratio) +
                         " below 0.2");
  }

  std::vector<int> inliers;
  for (size_t i = 0; i < points.size(); ++i) {
    if (std::abs(dot(best_model.normal, points[i]) - best_model.offset) <= inlier_thresh) {
      inliers.push_back(static_cast<int>(i));
    }
  }
  PlaneModel refined = fit_plane_lsq(points, inliers);

  GroundPlane out;
  out.normal = refined.normal;
  out.offset = refined.offset;
  out.camera_height = std::abs(refined.offset);
  out.inlier_ratio = ratio;
  return out;
}

}  // namespace mvdepth::geometry
