#include <doctest.h>

#include "clcalib/metrics.hpp"
#include "kitti_fixture.hpp"
#include "test_util.hpp"

using namespace clcalib;
using namespace testutil;

namespace {

// Rotation-matrix oracle for the full relative angle, independent of the
// quaternion path: theta = atan2(|vee(M - M^T)/2|, (tr(M) - 1)/2).
double rotation_angle_matrix_oracle_deg(const Quat& q_ref, const Quat& q_est) {
  const Mat3 m = q_ref.toRotationMatrix() * q_est.toRotationMatrix().transpose();
  const Vec3 skew_part(0.5 * (m(2, 1) - m(1, 2)), 0.5 * (m(0, 2) - m(2, 0)),
                       0.5 * (m(1, 0) - m(0, 1)));
  return std::atan2(skew_part.norm(), 0.5 * (m.trace() - 1.0)) * 180.0 / M_PI;
}

}  // namespace

TEST_CASE("translation error in centimeters") {
  CHECK(translation_error_cm(Vec3(1, 2, 3), Vec3(1, 2, 3)) == 0.0);
  CHECK(translation_error_cm(Vec3(0, 0, 0), Vec3(0.03, 0.04, 0.0)) ==
        doctest::Approx(5.0).epsilon(1e-12));

  const CalibResult kitti = kitti_left_reference();
  CHECK(translation_error_cm(kitti.translation, kitti.translation) == 0.0);

  Rng rng(61);
  for (int i = 0; i < 300; ++i) {
    const Vec3 a(rng.normal(), rng.normal(), rng.normal());
    const Vec3 b(rng.normal(), rng.normal(), rng.normal());
    const Vec3 c(rng.normal(), rng.normal(), rng.normal());
    CHECK(translation_error_cm(a, c) <=
          translation_error_cm(a, b) + translation_error_cm(b, c) + 1e-9);
  }
}

TEST_CASE("rotation error conventions") {
  Rng rng(62);
  const Quat q = random_quat(rng);
  CHECK(rotation_error_deg(q, q) == doctest::Approx(0.0));

  // the quaternion-angle formula gives the half-angle; full_angle doubles it
  CHECK(rotation_error_deg(Quat::Identity(), rz_deg(90.0), RotationErrorConvention::paper) ==
        doctest::Approx(45.0).epsilon(1e-12));
  CHECK(rotation_error_deg(Quat::Identity(), rz_deg(90.0),
                           RotationErrorConvention::full_angle) ==
        doctest::Approx(90.0).epsilon(1e-12));

  double prev = -1.0;
  for (double theta = 1.0; theta < 180.0; theta += 1.0) {
    const double e =
        rotation_error_deg(Quat::Identity(), rz_deg(theta), RotationErrorConvention::paper);
    CHECK(e > prev);
    prev = e;
  }
}

TEST_CASE("rotation error is symmetric and sign-insensitive") {
  Rng rng(63);
  for (int i = 0; i < 500; ++i) {
    const Quat a = random_quat(rng), b = random_quat(rng);
    const double ab = rotation_error_deg(a, b);
    CHECK(ab == doctest::Approx(rotation_error_deg(b, a)).epsilon(1e-12));
    Quat a_flipped = a;
    a_flipped.coeffs() = -a_flipped.coeffs();
    CHECK(ab == doctest::Approx(rotation_error_deg(a_flipped, b)).epsilon(1e-12));
    Quat b_flipped = b;
    b_flipped.coeffs() = -b_flipped.coeffs();
    CHECK(ab == doctest::Approx(rotation_error_deg(a, b_flipped)).epsilon(1e-12));
  }
}

TEST_CASE("rotation error matches the matrix oracle on random pairs") {
  Rng rng(64);
  for (int i = 0; i < 1000; ++i) {
    const Quat a = random_quat(rng), b = random_quat(rng);
    const double full = rotation_error_deg(a, b, RotationErrorConvention::full_angle);
    const double half = rotation_error_deg(a, b, RotationErrorConvention::paper);
    CHECK(std::abs(full - rotation_angle_matrix_oracle_deg(a, b)) < 1e-9);
    CHECK(std::abs(full - 2.0 * half) < 1e-12);
  }
}

TEST_CASE("per-axis breakdown") {
  Rng rng(65);
  const Quat q = random_quat(rng);
  const Vec3 t(0.2, -0.4, 1.0);

  SUBCASE("identical inputs give all zeros") {
    const MetricReport m = compute_metrics(t, q, t, q);
    CHECK(m.e_t_cm == 0.0);
    CHECK(m.e_r_deg == doctest::Approx(0.0));
    CHECK(m.translation_axes_cm.norm() == 0.0);
    CHECK(m.rotation_axes_deg.norm() == doctest::Approx(0.0));
    CHECK(!m.gimbal_warning);
  }

  SUBCASE("pure x offset of 1 cm") {
    const MetricReport m = compute_metrics(t + Vec3(0.01, 0, 0), q, t, q);
    CHECK(m.translation_axes_cm.x() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.translation_axes_cm.y() == 0.0);
    CHECK(m.translation_axes_cm.z() == 0.0);
    CHECK(m.e_t_cm == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("relative yaw of 1 degree lands in the yaw slot") {
    const MetricReport m = compute_metrics(t, rz_deg(1.0) * q, t, q);
    CHECK(m.rotation_axes_deg.z() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(m.rotation_axes_deg.x() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(m.rotation_axes_deg.y() == doctest::Approx(0.0).epsilon(1e-9));
  }

  SUBCASE("e_t is consistent with its per-axis parts") {
    for (int i = 0; i < 200; ++i) {
      const Vec3 a(rng.normal(), rng.normal(), rng.normal());
      const Vec3 b(rng.normal(), rng.normal(), rng.normal());
      const MetricReport m = compute_metrics(a, q, b, q);
      CHECK(m.e_t_cm * m.e_t_cm ==
            doctest::Approx(m.translation_axes_cm.squaredNorm()).epsilon(1e-9));
    }
  }

  SUBCASE("near-90-degree relative pitch sets the gimbal warning") {
    const MetricReport m = compute_metrics(t, ry_deg(89.8) * q, t, q);
    CHECK(m.gimbal_warning);
    const MetricReport ok = compute_metrics(t, ry_deg(45.0) * q, t, q);
    CHECK(!ok.gimbal_warning);
  }
}

TEST_CASE("KITTI reference fixtures are nearly orthonormal and self-consistent") {
  for (const CalibResult& r : {kitti_left_reference(), kitti_right_reference()}) {
    const Mat3 gram = r.rotation_matrix * r.rotation_matrix.transpose();
    CHECK((gram - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-4);
    CHECK(r.rotation_matrix.determinant() == doctest::Approx(1.0).epsilon(1e-4));
    // quaternion agrees with the raw matrix to the published precision
    CHECK((r.rotation.toRotationMatrix() - r.rotation_matrix).cwiseAbs().maxCoeff() < 1e-4);
  }
  // the two cameras sit ~50 cm apart on the rig, nearly aligned
  const CalibResult left = kitti_left_reference();
  const CalibResult right = kitti_right_reference();
  CHECK(translation_error_cm(left.translation, right.translation) ==
        doctest::Approx(50.3).epsilon(0.01));
  CHECK(rotation_error_deg(left.rotation, right.rotation,
                           RotationErrorConvention::full_angle) < 0.2);
}
