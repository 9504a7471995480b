#pragma once

#include <cstdint>
#include <string>

#include "clcalib/dataio.hpp"
#include "clcalib/rng.hpp"
#include "clcalib/sync.hpp"

namespace clcalib {

enum class MotionProfile { figure_eight_3d, planar_loop, straight_line };

MotionProfile motion_profile_from_string(const std::string& s);
std::string to_string(MotionProfile profile);

struct ScenarioSpec {
  Pose t_gt = Pose::identity();  // ground-truth calibration, LiDAR -> camera
  double duration = 60.0;        // [s]
  double rate = 10.0;            // [Hz]
  MotionProfile profile = MotionProfile::figure_eight_3d;
  int world_point_count = 4000;
  double world_extent = 40.0;    // [m] box footprint edge length
  std::uint64_t rng_seed = 0;
};

struct NoiseSpec {
  double odo_rot_sigma_deg = 0.0;    // per relative motion
  double odo_trans_sigma = 0.0;      // [m] per relative motion
  double cam_scale_drift = 1.0;      // multiplicative translation factor per pair
  double pixel_sigma = 0.0;          // [px]
  double outlier_rate = 0.0;         // fraction in [0, 1)
  double outlier_max_offset = 50.0;  // [px]
};

struct Scenario {
  ScenarioSpec spec;
  NoiseSpec noise;
  Pose t_gt;
  Trajectory cam;    // observed camera odometry: scale-ambiguous, noisy
  Trajectory lidar;  // observed LiDAR odometry: metric, noisy
  std::vector<Vec3> world_points;
  std::vector<PointCloudFrame> clouds;  // one sweep per LiDAR sample, sensor frame
};

/// Pose of the LiDAR on the motion profile at a sample knot (noise-free).
Pose profile_pose(const ScenarioSpec& spec, double t);

/// Noise-free LiDAR pose at an arbitrary time. The ground-truth motion is
/// piecewise constant-velocity between the sample knots (translation lerped,
/// rotation slerped), so the synchronization module's interpolation
/// reproduces it exactly.
Pose true_pose_at(const ScenarioSpec& spec, double t);

/// LiDAR trajectory sampled from the profile; camera trajectory is its
/// conjugate through t_gt, with per-pair translation magnitudes rescaled by
/// the drift model and both odometries perturbed per relative motion.
Scenario generate_scenario(const ScenarioSpec& spec, const NoiseSpec& noise = {});

/// Per-frame correspondences: visible points projected through t_gt from the
/// exact pose at the camera timestamp, plus pixel noise and uniform-offset
/// outliers (clamped inside the image). frame_count = 0 uses every camera
/// frame; otherwise a uniformly spaced subset. Frames seeing fewer than 10
/// points are skipped with a counter; only all frames skipping is an error.
std::vector<CorrespondenceSet> synth_correspondences(const Scenario& scenario,
                                                     const CameraIntrinsics& k,
                                                     const NoiseSpec& noise, int per_frame,
                                                     int frame_count = 0,
                                                     int* skipped_frames = nullptr);

/// Uniform sample without replacement of max(1, round(fraction * n)) items;
/// deterministic per seed, original item order preserved.
CorrespondenceSet subsample(const CorrespondenceSet& set, double fraction, std::uint64_t seed);

CameraIntrinsics default_intrinsics();

/// A forward-looking rig: LiDAR x-forward/z-up, camera z-forward/y-down,
/// with a small translation offset.
Pose default_rig();

struct DatasetPaths {
  std::string cam_trajectory;
  std::string lidar_trajectory;
  std::string intrinsics;
  std::string cloud_manifest;
  std::string correspondences;
  std::string gt_calib;
  std::string config;
};

/// Emits the scenario in the toolkit's on-disk formats under `dir`, plus a
/// ready-to-run pipeline config. Identical inputs produce byte-identical files.
DatasetPaths write_dataset(const Scenario& scenario, const CameraIntrinsics& k,
                           const std::vector<CorrespondenceSet>& corr_sets,
                           const std::string& dir);

}  // namespace clcalib
