#include "clcalib/metrics.hpp"

namespace clcalib {

namespace {
constexpr double kRad2Deg = 180.0 / M_PI;
}

RotationErrorConvention rotation_convention_from_string(const std::string& s) {
  if (s == "paper") return RotationErrorConvention::paper;
  if (s == "full_angle") return RotationErrorConvention::full_angle;
  throw ConfigError("unknown rotation_error_convention '" + s + "'");
}

std::string to_string(RotationErrorConvention c) {
  return c == RotationErrorConvention::paper ? "paper" : "full_angle";
}

double translation_error_cm(const Vec3& t_ref, const Vec3& t_est) {
  return (t_ref - t_est).norm() * 100.0;
}

double rotation_error_deg(const Quat& q_ref, const Quat& q_est,
                          RotationErrorConvention convention) {
  const Quat m = canonicalize(q_ref * q_est.conjugate());
  const double vec_norm = Vec3(m.x(), m.y(), m.z()).norm();
  const double half_angle = std::atan2(vec_norm, m.w());
  const double factor = convention == RotationErrorConvention::paper ? 1.0 : 2.0;
  return factor * half_angle * kRad2Deg;
}

MetricReport compute_metrics(const Vec3& t_ref, const Quat& q_ref, const Vec3& t_est,
                             const Quat& q_est, RotationErrorConvention convention) {
  MetricReport r;
  r.convention = convention;
  r.e_t_cm = translation_error_cm(t_ref, t_est);
  r.e_r_deg = rotation_error_deg(q_ref, q_est, convention);
  r.translation_axes_cm = (t_ref - t_est).cwiseAbs() * 100.0;

  // Intrinsic X-Y-Z factorization of the relative rotation:
  // m = Rx(roll) * Ry(pitch) * Rz(yaw).
  const Mat3 m = canonicalize(q_ref * q_est.conjugate()).toRotationMatrix();
  const double pitch = std::asin(std::clamp(m(0, 2), -1.0, 1.0));
  const double roll = std::atan2(-m(1, 2), m(2, 2));
  const double yaw = std::atan2(-m(0, 1), m(0, 0));
  r.rotation_axes_deg = Vec3(std::abs(roll), std::abs(pitch), std::abs(yaw)) * kRad2Deg;
  r.gimbal_warning = std::abs(std::abs(pitch) * kRad2Deg - 90.0) < 0.5;
  return r;
}

}  // namespace clcalib
