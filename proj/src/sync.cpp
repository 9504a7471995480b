#include "clcalib/sync.hpp"

#include <algorithm>

namespace clcalib {

namespace {
constexpr double kExactStamp = 1e-12;  // [s] treat as the same instant
}

std::vector<SyncedFrame> pair_trajectories(const Trajectory& cam, const Trajectory& lidar,
                                           double max_gap, SyncStats* stats) {
  if (cam.poses.size() < 2 || lidar.poses.size() < 2)
    throw TooFewPairsError("need at least 2 poses per trajectory");
  if (max_gap <= 0.0) throw ConfigError("max_gap must be positive");

  const double lidar_t0 = lidar.poses.front().t_stamp;
  const double lidar_t1 = lidar.poses.back().t_stamp;
  if (cam.poses.back().t_stamp < lidar_t0 || cam.poses.front().t_stamp > lidar_t1)
    throw NoOverlapError("camera and LiDAR time ranges do not intersect");

  std::vector<double> lidar_stamps;
  lidar_stamps.reserve(lidar.poses.size());
  for (const Pose& p : lidar.poses) lidar_stamps.push_back(p.t_stamp);

  std::vector<SyncedFrame> frames;
  for (const Pose& cam_pose : cam.poses) {
    const double t = cam_pose.t_stamp;
    if (t < lidar_t0 || t > lidar_t1) continue;
    if (stats) ++stats->in_range;

    auto it = std::upper_bound(lidar_stamps.begin(), lidar_stamps.end(), t);
    size_t hi = static_cast<size_t>(it - lidar_stamps.begin());
    if (hi == 0) hi = 1;
    if (hi == lidar_stamps.size()) hi = lidar_stamps.size() - 1;
    const size_t lo = hi - 1;

    SyncedFrame frame;
    frame.cam_pose = cam_pose;
    if (std::abs(t - lidar_stamps[lo]) <= kExactStamp) {
      frame.lidar_pose_interp = lidar.poses[lo];
      frame.lidar_pose_interp.t_stamp = t;
      frame.nearest_cloud_id = static_cast<int>(lo);
    } else if (std::abs(lidar_stamps[hi] - t) <= kExactStamp) {
      frame.lidar_pose_interp = lidar.poses[hi];
      frame.lidar_pose_interp.t_stamp = t;
      frame.nearest_cloud_id = static_cast<int>(hi);
    } else {
      if (t - lidar_stamps[lo] > max_gap || lidar_stamps[hi] - t > max_gap) {
        if (stats) ++stats->dropped_gap;
        continue;
      }
      frame.lidar_pose_interp = interpolate_pose(lidar.poses[lo], lidar.poses[hi], t);
      frame.nearest_cloud_id =
          (t - lidar_stamps[lo] <= lidar_stamps[hi] - t) ? static_cast<int>(lo)
                                                         : static_cast<int>(hi);
    }
    frame.compensation =
        compose(inverse(frame.lidar_pose_interp), lidar.poses[frame.nearest_cloud_id]);
    frame.compensation.t_stamp = t;
    frames.push_back(std::move(frame));
  }
  return frames;
}

std::vector<MotionPair> relative_motions(const std::vector<SyncedFrame>& frames,
                                         double min_motion, double min_rot_deg,
                                         SyncStats* stats) {
  std::vector<MotionPair> pairs;
  const double min_rot_rad = min_rot_deg * M_PI / 180.0;
  for (size_t i = 0; i + 1 < frames.size(); ++i) {
    MotionPair pair;
    pair.index = static_cast<int>(i);
    pair.t_cam = compose(inverse(frames[i].cam_pose), frames[i + 1].cam_pose);
    pair.t_lidar = compose(inverse(frames[i].lidar_pose_interp), frames[i + 1].lidar_pose_interp);
    if (pair.t_lidar.trans.norm() < min_motion && quat_angle(pair.t_lidar.rot) < min_rot_rad) {
      if (stats) ++stats->dropped_stationary;
      continue;
    }
    pair.scale_init = std::clamp(
        pair.t_lidar.trans.norm() / std::max(pair.t_cam.trans.norm(), 1e-9), 1e-3, 1e3);
    pairs.push_back(std::move(pair));
  }
  if (pairs.size() < 2)
    throw TooFewPairsError("fewer than 2 motion pairs survive stationary filtering");
  return pairs;
}

PointCloudFrame compensate_cloud(const PointCloudFrame& cloud, const SyncedFrame& frame) {
  if (cloud.frame_id != frame.nearest_cloud_id)
    throw FrameMismatchError("cloud frame " + std::to_string(cloud.frame_id) +
                             " does not match synced frame's nearest cloud " +
                             std::to_string(frame.nearest_cloud_id));
  PointCloudFrame out;
  out.frame_id = cloud.frame_id;
  out.t_stamp = frame.cam_pose.t_stamp;
  out.points.reserve(cloud.points.size());
  for (const Vec3& p : cloud.points) out.points.push_back(frame.compensation.apply(p));
  return out;
}

}  // namespace clcalib
