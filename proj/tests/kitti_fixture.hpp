#pragma once

// Published left/right camera-LiDAR calibration for KITTI odometry sequence
// 00, used as parse/round-trip fixtures and as realistic metric-test inputs.

#include "clcalib/dataio.hpp"

namespace testutil {

inline clcalib::CalibResult kitti_left_reference() {
  clcalib::CalibResult r;
  r.rotation_matrix << -1.2619e-04, -9.9997e-01, -8.2230e-03,
                       -7.8537e-03,  8.2238e-03, -9.9994e-01,
                        9.9997e-01, -6.1602e-05, -7.8545e-03;
  r.translation = clcalib::Vec3(5.1090e-02, -5.5873e-02, -2.9575e-01);
  clcalib::Quat q(r.rotation_matrix);
  q.normalize();
  r.rotation = clcalib::canonicalize(q);
  return r;
}

inline clcalib::CalibResult kitti_right_reference() {
  clcalib::CalibResult r;
  r.rotation_matrix << -1.8202e-03, -9.9996e-01, -8.2416e-03,
                       -8.2823e-03,  8.2564e-03, -9.9993e-01,
                        9.9996e-01, -1.7518e-03, -8.2970e-03;
  r.translation = clcalib::Vec3(-4.5166e-01, -4.8448e-02, -2.8787e-01);
  clcalib::Quat q(r.rotation_matrix);
  q.normalize();
  r.rotation = clcalib::canonicalize(q);
  return r;
}

}  // namespace testutil
