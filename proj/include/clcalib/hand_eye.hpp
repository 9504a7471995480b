#pragma once

#include <cstdint>

#include "clcalib/residuals.hpp"
#include "clcalib/solver.hpp"

namespace clcalib {

/// Solved calibration: T_calib maps LiDAR-frame points into the camera frame
/// (the direction used by the projection residuals). Scales are per-pair
/// byproducts, not calibration outputs.
struct CalibEstimate {
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();
  std::vector<double> scales;
  SolveReport report;
  std::vector<std::string> warnings;

  Pose pose() const { return Pose(0.0, rotation, translation); }
};

struct CoarseOptions {
  bool use_closed_form_rot_init = true;
  int min_pairs = 10;
  ResidualOptions residuals;
  SolveOptions solver;
};

struct FineOptions {
  double correspondence_fraction = 0.05;  // per-frame fraction of items kept
  int max_pairs_used = 100;               // image-point cloud pairs
  std::uint64_t rng_seed = 0;
  bool include_motion_constraints = true;
  ResidualOptions residuals;
  SolveOptions solver;
};

/// Closed-form rotation seed: smallest eigenvector of the stacked 4x4
/// quaternion constraint matrices built from q_cam * q = q * q_lidar.
/// Requires >= 3 pairs exciting at least two non-parallel rotation axes
/// (second-largest singular value of the stacked rotation-vector matrix
/// above 1e-6).
Quat init_rotation_closed_form(const std::vector<MotionPair>& pairs);

/// Least-squares translation at fixed rotation and fixed per-pair scales;
/// the translation residual is linear in t_calib. Degenerate directions get
/// the minimum-norm solution.
Vec3 init_translation_linear(const std::vector<MotionPair>& pairs, const Quat& rotation,
                             const std::vector<double>& scales);

/// Motion-only stage: closed-form seeds, then LM over the rotation and
/// translation costs. Falls back to an identity rotation seed (with a
/// warning) when the closed form is degenerate.
CalibEstimate coarse_calibrate(const std::vector<MotionPair>& pairs, const CoarseOptions& opts);

/// Joint stage: reprojection constraints from a time-diverse frame subset
/// plus (optionally) the motion constraints, started from t_init.
CalibEstimate fine_calibrate(const std::vector<MotionPair>& pairs,
                             const std::vector<CorrespondenceSet>& corr_sets,
                             const CameraIntrinsics& k, const Pose& t_init,
                             const FineOptions& opts);

/// Up to max_frames sets, uniformly spaced over the frame-id ordering.
std::vector<const CorrespondenceSet*> select_frames_uniform(
    const std::vector<CorrespondenceSet>& sets, int max_frames);

}  // namespace clcalib
