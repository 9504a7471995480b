#pragma once

#include "clcalib/geometry.hpp"
#include "clcalib/rng.hpp"

namespace testutil {

using clcalib::Pose;
using clcalib::Quat;
using clcalib::Rng;
using clcalib::Vec3;

inline Quat axis_deg(const Vec3& axis, double deg) {
  return Quat(Eigen::AngleAxisd(deg * M_PI / 180.0, axis.normalized()));
}

inline Quat rx_deg(double deg) { return axis_deg(Vec3::UnitX(), deg); }
inline Quat ry_deg(double deg) { return axis_deg(Vec3::UnitY(), deg); }
inline Quat rz_deg(double deg) { return axis_deg(Vec3::UnitZ(), deg); }

inline Quat random_quat(Rng& rng) {
  return clcalib::make_quat(rng.normal(), rng.normal(), rng.normal(), rng.normal());
}

inline Pose random_pose(Rng& rng, double trans_scale = 1.0) {
  return Pose(0.0, random_quat(rng),
              Vec3(rng.normal(), rng.normal(), rng.normal()) * trans_scale);
}

// 4x4 homogeneous-matrix oracle for rigid-transform algebra.
inline Eigen::Matrix4d hom(const Pose& p) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = p.rot.toRotationMatrix();
  m.topRightCorner<3, 1>() = p.trans;
  return m;
}

inline Pose pose_from_hom(const Eigen::Matrix4d& m, double t_stamp = 0.0) {
  return Pose(t_stamp, Quat(Eigen::Matrix3d(m.topLeftCorner<3, 3>())),
              Vec3(m.topRightCorner<3, 1>()));
}

inline double rotation_angle_between(const Quat& a, const Quat& b) {
  return clcalib::quat_angle(a.conjugate() * b);
}

inline double pose_difference(const Pose& a, const Pose& b) {
  return rotation_angle_between(a.rot, b.rot) + (a.trans - b.trans).norm();
}

}  // namespace testutil
