#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>
#include <optional>

#include "clcalib/errors.hpp"

namespace clcalib {

using Quat = Eigen::Quaterniond;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kDepthEpsilon = 1e-6;     // [m] minimum projectable depth
inline constexpr double kMinTimeInterval = 1e-9;  // [s] degenerate interpolation span

/// Resolve the double cover: flip the sign so w >= 0 (first nonzero component
/// positive when w == 0). Keeps file output deterministic.
inline Quat canonicalize(const Quat& q) {
  const double w = q.w(), x = q.x(), y = q.y(), z = q.z();
  const bool flip = w < 0.0 ||
                    (w == 0.0 && (x < 0.0 || (x == 0.0 && (y < 0.0 || (y == 0.0 && z < 0.0)))));
  return flip ? Quat(-w, -x, -y, -z) : q;
}

/// Unit quaternion from arbitrary (w,x,y,z), normalized and canonicalized.
inline Quat make_quat(double w, double x, double y, double z) {
  Quat q(w, x, y, z);
  q.normalize();
  return canonicalize(q);
}

/// Rotation angle of q in [0, pi].
inline double quat_angle(const Quat& q) {
  const double v = Vec3(q.x(), q.y(), q.z()).norm();
  return 2.0 * std::atan2(v, std::abs(q.w()));
}

/// Exponential map: rotation vector (axis * angle) -> unit quaternion.
inline Quat quat_exp(const Vec3& rotvec) {
  const double angle = rotvec.norm();
  double s;
  if (angle < 1e-8) {
    // sin(a/2)/a for small a
    s = 0.5 - angle * angle / 48.0;
  } else {
    s = std::sin(0.5 * angle) / angle;
  }
  return Quat(std::cos(0.5 * angle), s * rotvec.x(), s * rotvec.y(), s * rotvec.z());
}

/// Logarithm map: unit quaternion -> rotation vector, angle in [0, pi].
inline Vec3 quat_log(const Quat& q_in) {
  const Quat q = canonicalize(q_in);
  const Vec3 v(q.x(), q.y(), q.z());
  const double vn = v.norm();
  const double angle = 2.0 * std::atan2(vn, q.w());
  if (vn < 1e-12) return 2.0 * v;  // angle/sin(angle/2) -> 2
  return (angle / vn) * v;
}

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

/// Timestamped rigid transform. `rot` is kept unit-norm and canonical by every
/// operation in this header.
struct Pose {
  double t_stamp = 0.0;
  Quat rot = Quat::Identity();
  Vec3 trans = Vec3::Zero();

  Pose() = default;
  Pose(double t, const Quat& q, const Vec3& tr) : t_stamp(t), rot(canonicalize(q)), trans(tr) {}

  static Pose identity(double t = 0.0) { return Pose(t, Quat::Identity(), Vec3::Zero()); }

  Vec3 apply(const Vec3& p) const { return rot * p + trans; }
};

/// Rigid composition a∘b; timestamp taken from b (the right-most frame).
inline Pose compose(const Pose& a, const Pose& b) {
  Quat q = a.rot * b.rot;
  q.normalize();
  return Pose(b.t_stamp, q, a.rot * b.trans + a.trans);
}

inline Pose inverse(const Pose& a) {
  const Quat qi = a.rot.conjugate();
  return Pose(a.t_stamp, qi, -(qi * a.trans));
}

/// Geodesic interpolation along the shortest path; near-parallel inputs fall
/// back to normalized linear interpolation.
inline Quat slerp(const Quat& q0, const Quat& q1, double alpha) {
  double d = q0.dot(q1);
  Quat q1s = q1;
  if (d < 0.0) {
    q1s.coeffs() = -q1s.coeffs();
    d = -d;
  }
  d = std::min(d, 1.0);
  Quat out;
  if (1.0 - d < 1e-9) {
    out.coeffs() = (1.0 - alpha) * q0.coeffs() + alpha * q1s.coeffs();
  } else {
    const double theta = std::acos(d);
    const double s = std::sin(theta);
    out.coeffs() = (std::sin((1.0 - alpha) * theta) / s) * q0.coeffs() +
                   (std::sin(alpha * theta) / s) * q1s.coeffs();
  }
  out.normalize();
  return canonicalize(out);
}

/// Pose at time t between p0 and p1: translation lerped, rotation slerped.
/// No extrapolation.
inline Pose interpolate_pose(const Pose& p0, const Pose& p1, double t) {
  const double dt = p1.t_stamp - p0.t_stamp;
  if (dt < kMinTimeInterval)
    throw DegenerateIntervalError("interpolation interval below 1e-9 s");
  if (t < p0.t_stamp || t > p1.t_stamp)
    throw OutOfRangeError("interpolation time outside [t0, t1]");
  const double alpha = (t - p0.t_stamp) / dt;
  return Pose(t, slerp(p0.rot, p1.rot, alpha),
              (1.0 - alpha) * p0.trans + alpha * p1.trans);
}

struct CameraIntrinsics {
  double fx = 0.0, fy = 0.0;  // [px]
  double cx = 0.0, cy = 0.0;  // [px]
  int width = 0, height = 0;  // [px]

  bool valid() const {
    return fx > 0.0 && fy > 0.0 && cx >= 0.0 && cx < width && cy >= 0.0 && cy < height;
  }

  bool contains(const Vec2& px) const {
    return px.x() >= 0.0 && px.x() < width && px.y() >= 0.0 && px.y() < height;
  }
};

/// Pinhole projection of a point given in the source (LiDAR) frame; t_calib
/// maps source-frame points into the camera frame. Returns nullopt when the
/// camera-frame depth is at or below depth_epsilon.
inline std::optional<Vec2> project_point(const Vec3& p, const CameraIntrinsics& k,
                                         const Pose& t_calib,
                                         double depth_epsilon = kDepthEpsilon) {
  const Vec3 pc = t_calib.apply(p);
  if (pc.z() <= depth_epsilon) return std::nullopt;
  return Vec2(k.fx * pc.x() / pc.z() + k.cx, k.fy * pc.y() / pc.z() + k.cy);
}

/// Throwing variant of project_point.
inline Vec2 project(const Vec3& p, const CameraIntrinsics& k, const Pose& t_calib,
                    double depth_epsilon = kDepthEpsilon) {
  const auto px = project_point(p, k, t_calib, depth_epsilon);
  if (!px) throw BehindCameraError("point behind camera (depth <= epsilon)");
  return *px;
}

/// Stack the columns of a square matrix top-to-bottom into one vector.
inline Eigen::VectorXd vec_flatten(const Eigen::MatrixXd& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

inline Eigen::Matrix<double, 9, 1> vec_flatten3(const Mat3& m) {
  return Eigen::Map<const Eigen::Matrix<double, 9, 1>>(m.data());
}

}  // namespace clcalib
