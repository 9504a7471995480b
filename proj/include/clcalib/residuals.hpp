#pragma once

#include "clcalib/problem.hpp"
#include "clcalib/sync.hpp"

namespace clcalib {

/// Weighting and robustifier settings shared by the block builders. Cauchy
/// scales are given in raw residual units and divided by the matching sigma
/// internally, since the kernel acts on squared whitened residuals.
struct ResidualOptions {
  double sigma_rot = 0.01;     // unitless, on the flattened rotation residual
  double sigma_trans = 0.02;   // [m]
  double sigma_px = 1.0;       // [px]
  bool use_cauchy = true;
  double cauchy_rot = 0.1;     // unitless
  double cauchy_trans = 0.05;  // [m]
  double cauchy_corr = 2.0;    // [px]
  double depth_epsilon = kDepthEpsilon;
  bool shared_scale = false;   // tie all pairs to a single scale variable
};

/// vec((R_calib R_lidar)^-1 (R_cam R_calib) - I), 9 rows.
class RotationMotionBlock final : public ResidualBlock {
 public:
  RotationMotionBlock(const MotionPair& pair, const ResidualOptions& opts);

  bool evaluate(const StateVector& x, Eigen::VectorXd& residual,
                Eigen::Matrix<double, Eigen::Dynamic, 6>* j_pose,
                Eigen::VectorXd* j_scale) const override;

 private:
  Mat3 r_cam_;
  Mat3 r_lidar_;
};

/// (R_cam - I) t_calib + s * t_cam - R_calib t_lidar, 3 rows. Holds the index
/// of its scale variable, or a fixed scale when scale_index < 0.
class TranslationMotionBlock final : public ResidualBlock {
 public:
  TranslationMotionBlock(const MotionPair& pair, int scale_index, const ResidualOptions& opts,
                         double fixed_scale = 1.0);

  bool evaluate(const StateVector& x, Eigen::VectorXd& residual,
                Eigen::Matrix<double, Eigen::Dynamic, 6>* j_pose,
                Eigen::VectorXd* j_scale) const override;

 private:
  Mat3 r_cam_;
  Vec3 t_cam_;
  Vec3 t_lidar_;
  double fixed_scale_;
};

/// proj(p_lidar, K, T_calib) - p_cmr, 2 rows. Not evaluable when the point
/// falls behind the camera at the current state.
class ReprojectionBlock final : public ResidualBlock {
 public:
  ReprojectionBlock(const CorrespondenceItem& item, const CameraIntrinsics& k,
                    const ResidualOptions& opts);

  bool evaluate(const StateVector& x, Eigen::VectorXd& residual,
                Eigen::Matrix<double, Eigen::Dynamic, 6>* j_pose,
                Eigen::VectorXd* j_scale) const override;

 private:
  Vec3 point_;
  Vec2 pixel_;
  CameraIntrinsics k_;
  double depth_epsilon_;
};

// Direct residual evaluations, shared with the blocks above.
Eigen::Matrix<double, 9, 1> residual_rot(const MotionPair& pair, const StateVector& state);
Vec3 residual_trans(const MotionPair& pair, const StateVector& state, double s);
/// Throws BehindCameraError when the point is not projectable.
Vec2 residual_corr(const CorrespondenceItem& item, const CameraIntrinsics& k,
                   const StateVector& state);

/// One rotation and one translation block per pair. Scale variable index is
/// the pair's position (a single shared index 0 when opts.shared_scale).
void append_motion_blocks(const std::vector<MotionPair>& pairs, const ResidualOptions& opts,
                          BlockList& blocks);
void append_corr_blocks(const CorrespondenceSet& set, const CameraIntrinsics& k,
                        const ResidualOptions& opts, BlockList& blocks);

struct GradientCheckReport {
  double max_rel_rot = 0.0;
  double max_rel_trans = 0.0;
  double max_rel_corr = 0.0;
  int samples = 0;
  double tolerance = 0.0;

  bool passed() const {
    return max_rel_rot <= tolerance && max_rel_trans <= tolerance && max_rel_corr <= tolerance;
  }
};

/// Compares the analytic Jacobian of every residual kind against central
/// finite differences on randomized constraints and states.
GradientCheckReport check_gradients(std::uint64_t seed, int samples = 100,
                                    double tolerance = 1e-5);

}  // namespace clcalib
