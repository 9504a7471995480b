#pragma once

#include "clcalib/geometry.hpp"

namespace clcalib {

/// The quaternion-angle formula atan2(|m_vec|, m_w) as printed returns the
/// half-angle of the relative rotation; `full_angle` doubles it.
enum class RotationErrorConvention { paper, full_angle };

RotationErrorConvention rotation_convention_from_string(const std::string& s);
std::string to_string(RotationErrorConvention c);

/// ||t_ref - t_est||_2 in centimeters.
double translation_error_cm(const Vec3& t_ref, const Vec3& t_est);

/// Angle of m = q_ref * q_est^-1 in degrees, sign-insensitive.
double rotation_error_deg(const Quat& q_ref, const Quat& q_est,
                          RotationErrorConvention convention = RotationErrorConvention::paper);

struct MetricReport {
  double e_t_cm = 0.0;
  double e_r_deg = 0.0;
  Vec3 translation_axes_cm = Vec3::Zero();  // |dx|, |dy|, |dz|
  Vec3 rotation_axes_deg = Vec3::Zero();    // |roll|, |pitch|, |yaw| of the relative rotation
  bool gimbal_warning = false;              // relative pitch within 0.5 deg of +-90
  RotationErrorConvention convention = RotationErrorConvention::paper;
};

/// Magnitude errors plus per-axis breakdown. Translation axes are absolute
/// component differences; rotation axes are the absolute intrinsic X-Y-Z
/// (roll, pitch, yaw) angles of the relative rotation.
MetricReport compute_metrics(const Vec3& t_ref, const Quat& q_ref, const Vec3& t_est,
                             const Quat& q_est,
                             RotationErrorConvention convention = RotationErrorConvention::paper);

}  // namespace clcalib
