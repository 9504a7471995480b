#pragma once

#include "clcalib/dataio.hpp"
#include "clcalib/geometry.hpp"

namespace clcalib {

/// A camera timestamp paired with the LiDAR pose interpolated to it.
struct SyncedFrame {
  Pose cam_pose;
  Pose lidar_pose_interp;   // same timestamp as cam_pose by construction
  int nearest_cloud_id = 0; // index of the nearest LiDAR sample
  Pose compensation;        // LiDAR frame at cloud time -> LiDAR frame at camera time
};

/// One pair of synchronized consecutive relative motions.
struct MotionPair {
  int index = 0;
  Pose t_cam;
  Pose t_lidar;
  double scale_init = 1.0;
};

struct SyncStats {
  int in_range = 0;
  int dropped_gap = 0;
  int dropped_stationary = 0;
};

inline constexpr double kDefaultMaxGap = 0.15;      // [s]
inline constexpr double kDefaultMinMotion = 0.01;   // [m]
inline constexpr double kDefaultMinRotDeg = 0.1;    // [deg]

/// Camera timestamps are the reference; the LiDAR pose is interpolated from
/// the two samples bracketing each camera stamp. Camera stamps outside the
/// LiDAR range, or whose bracketing samples are farther than max_gap on
/// either side, are dropped and counted.
std::vector<SyncedFrame> pair_trajectories(const Trajectory& cam, const Trajectory& lidar,
                                           double max_gap = kDefaultMaxGap,
                                           SyncStats* stats = nullptr);

/// Consecutive pose differences T_i = inverse(P_i) * P_{i+1} for both sensors.
/// Pairs with LiDAR motion below both thresholds are dropped as stationary;
/// they carry no alignment information and destabilize the scale variables.
std::vector<MotionPair> relative_motions(const std::vector<SyncedFrame>& frames,
                                         double min_motion = kDefaultMinMotion,
                                         double min_rot_deg = kDefaultMinRotDeg,
                                         SyncStats* stats = nullptr);

/// Rigidly transports every point by frame.compensation so the cloud is
/// expressed in the LiDAR frame at the camera timestamp.
PointCloudFrame compensate_cloud(const PointCloudFrame& cloud, const SyncedFrame& frame);

}  // namespace clcalib
