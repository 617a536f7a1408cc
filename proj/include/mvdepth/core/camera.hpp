#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace mvdepth {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

inline Point3 operator+(const Point3& a, const Point3& b) {
  return {a.x + b.x, a.y + b.y, a.z + b.z};
}
inline Point3 operator-(const Point3& a, const Point3& b) {
  return {a.x - b.x, a.y - b.y, a.z - b.z};
}
inline Point3 operator*(double s, const Point3& p) { return {s * p.x, s * p.y, s * p.z}; }
inline double dot(const Point3& a, const Point3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Point3 cross(const Point3& a, const Point3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Point3& p) { return std::sqrt(dot(p, p)); }

/// Pinhole parameters. Pixel centers sit at integer coordinates, origin top-left,
/// u rightward, v downward; camera frame x right, y down, z forward.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  CameraIntrinsics() = default;
  CameraIntrinsics(double fx_, double fy_, double cx_, double cy_)
      : fx(fx_), fy(fy_), cx(cx_), cy(cy_) {
    if (!(fx > 0.0) || !(fy > 0.0)) {
      throw std::domain_error("CameraIntrinsics: focal lengths must be positive");
    }
  }
};

/// SE(3) transform p' = R*p + t with a row-major 3x3 rotation.
/// Construction checks orthonormality and det(R) = +1 within 1e-9.
struct RigidPose {
  std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};
  std::array<double, 3> translation{0, 0, 0};

  static RigidPose identity() { return RigidPose{}; }

  static RigidPose from(const std::array<double, 9>& rotation,
                        const std::array<double, 3>& translation) {
    constexpr double kTol = 1e-9;
    const auto& r = rotation;
    // R^T R = I
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        double s = r[0 * 3 + i] * r[0 * 3 + j] + r[1 * 3 + i] * r[1 * 3 + j] +
                   r[2 * 3 + i] * r[2 * 3 + j];
        double expect = (i == j) ? 1.0 : 0.0;
        if (std::abs(s - expect) > kTol) {
          throw std::domain_error("RigidPose: rotation is not orthonormal within 1e-9");
        }
      }
    }
    double det = r[0] * (r[4] * r[8] - r[5] * r[7]) - r[1] * (r[3] * r[8] - r[5] * r[6]) +
                 r[2] * (r[3] * r[7] - r[4] * r[6]);
    if (std::abs(det - 1.0) > kTol) {
      throw std::domain_error("RigidPose: rotation determinant is not +1 within 1e-9");
    }
    for (double v : translation) {
      if (!std::isfinite(v)) throw std::domain_error("RigidPose: non-finite translation");
    }
    RigidPose pose;
    pose.rotation = rotation;
    pose.translation = translation;
    return pose;
  }

  static RigidPose from_translation(double tx, double ty, double tz) {
    RigidPose pose;
    pose.translation = {tx, ty, tz};
    return pose;
  }

  Point3 apply(const Point3& p) const {
    const auto& r = rotation;
    const auto& t = translation;
    return {r[0] * p.x + r[1] * p.y + r[2] * p.z + t[0],
            r[3] * p.x + r[4] * p.y + r[5] * p.z + t[1],
            r[6] * p.x + r[7] * p.y + r[8] * p.z + t[2]};
  }

  /// Rotation only, no translation.
  Point3 rotate(const Point3& p) const {
    const auto& r = rotation;
    return {r[0] * p.x + r[1] * p.y + r[2] * p.z, r[3] * p.x + r[4] * p.y + r[5] * p.z,
            r[6] * p.x + r[7] * p.y + r[8] * p.z};
  }

  /// this * other: apply(p) == this.apply(other.apply(p)).
  RigidPose compose(const RigidPose& other) const {
    RigidPose out;
    const auto& a = rotation;
    const auto& b = other.rotation;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        out.rotation[i * 3 + j] = a[i * 3 + 0] * b[0 * 3 + j] + a[i * 3 + 1] * b[1 * 3 + j] +
                                  a[i * 3 + 2] * b[2 * 3 + j];
      }
    }
    Point3 t = apply({other.translation[0], other.translation[1], other.translation[2]});
    out.translation = {t.x, t.y, t.z};
    return out;
  }

  RigidPose inverse() const {
    RigidPose out;
    const auto& r = rotation;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out.rotation[i * 3 + j] = r[j * 3 + i];
    Point3 t = out.rotate({-translation[0], -translation[1], -translation[2]});
    out.translation = {t.x, t.y, t.z};
    return out;
  }
};

/// Rotation about a (not necessarily unit) axis by angle radians, row-major.
inline std::array<double, 9> rotation_axis_angle(const Point3& axis, double angle) {
  double n = norm(axis);
  if (n == 0.0) throw std::domain_error("rotation_axis_angle: zero axis");
  double x = axis.x / n, y = axis.y / n, z = axis.z / n;
  double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
  return {t * x * x + c,     t * x * y - s * z, t * x * z + s * y,
          t * x * y + s * z, t * y * y + c,     t * y * z - s * x,
          t * x * z - s * y, t * y * z + s * x, t * z * z + c};
}

/// Per-object translational displacement expressed in the source-view frame.
/// Applied additively after the rigid transform.
struct ObjectMotion {
  std::array<double, 3> translation{0, 0, 0};

  ObjectMotion() = default;
  ObjectMotion(double tx, double ty, double tz) : translation{tx, ty, tz} {
    for (double v : translation) {
      if (!std::isfinite(v)) throw std::domain_error("ObjectMotion: non-finite component");
    }
  }

  static ObjectMotion zero() { return ObjectMotion{}; }
  bool is_zero() const {
    return translation[0] == 0.0 && translation[1] == 0.0 && translation[2] == 0.0;
  }
};

}  // namespace mvdepth
