#include "clcalib/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace clcalib {

namespace {

constexpr double kMinDepth = 2.0;   // [m]
constexpr double kMaxDepth = 80.0;  // [m]

// Sub-stream tags for Rng::derive.
constexpr std::uint64_t kStreamWorld = 1;
constexpr std::uint64_t kStreamLidarNoise = 2;
constexpr std::uint64_t kStreamCamNoise = 3;
constexpr std::uint64_t kStreamFrameBase = 1000;

Quat quat_from_rpy(double roll, double pitch, double yaw) {
  return Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
              Eigen::AngleAxisd(roll, Vec3::UnitX()));
}

Pose random_motion_perturbation(Rng& rng, double rot_sigma_rad, double trans_sigma) {
  const Vec3 rv(rng.normal(0.0, rot_sigma_rad), rng.normal(0.0, rot_sigma_rad),
                rng.normal(0.0, rot_sigma_rad));
  const Vec3 tv(rng.normal(0.0, trans_sigma), rng.normal(0.0, trans_sigma),
                rng.normal(0.0, trans_sigma));
  return Pose(0.0, quat_exp(rv), tv);
}

void validate_spec(const ScenarioSpec& spec, const NoiseSpec& noise) {
  if (spec.rate <= 0.0) throw InvalidSpecError("rate must be positive");
  if (spec.duration * spec.rate < 4.0) throw InvalidSpecError("need at least 4 samples");
  if (spec.world_point_count <= 0) throw InvalidSpecError("world_point_count must be positive");
  if (spec.world_extent <= 0.0) throw InvalidSpecError("world_extent must be positive");
  if (noise.odo_rot_sigma_deg < 0.0 || noise.odo_trans_sigma < 0.0 || noise.pixel_sigma < 0.0)
    throw InvalidSpecError("noise sigmas must be non-negative");
  if (noise.outlier_rate < 0.0 || noise.outlier_rate >= 1.0)
    throw InvalidSpecError("outlier_rate must be in [0, 1)");
  if (noise.cam_scale_drift <= 0.0) throw InvalidSpecError("cam_scale_drift must be positive");
}

/// Re-chain relative motions from a fixed start pose, applying per-pair
/// translation rescaling (camera drift) and odometry noise.
Trajectory perturb_chain(const std::vector<Pose>& true_poses, double drift, Rng& rng,
                         double rot_sigma_rad, double trans_sigma,
                         const std::string& label) {
  Trajectory out;
  out.sensor_label = label;
  out.poses.push_back(true_poses.front());
  double drift_factor = 1.0;
  for (size_t i = 0; i + 1 < true_poses.size(); ++i) {
    Pose rel = compose(inverse(true_poses[i]), true_poses[i + 1]);
    drift_factor *= drift;
    rel.trans *= drift_factor;
    if (rot_sigma_rad > 0.0 || trans_sigma > 0.0)
      rel = compose(rel, random_motion_perturbation(rng, rot_sigma_rad, trans_sigma));
    Pose next = compose(out.poses.back(), rel);
    next.t_stamp = true_poses[i + 1].t_stamp;
    out.poses.push_back(next);
  }
  return out;
}

}  // namespace

MotionProfile motion_profile_from_string(const std::string& s) {
  if (s == "figure_eight_3d") return MotionProfile::figure_eight_3d;
  if (s == "planar_loop") return MotionProfile::planar_loop;
  if (s == "straight_line") return MotionProfile::straight_line;
  throw ConfigError("unknown motion profile '" + s + "'");
}

std::string to_string(MotionProfile profile) {
  switch (profile) {
    case MotionProfile::figure_eight_3d: return "figure_eight_3d";
    case MotionProfile::planar_loop: return "planar_loop";
    case MotionProfile::straight_line: return "straight_line";
  }
  return "unknown";
}

Pose profile_pose(const ScenarioSpec& spec, double t) {
  switch (spec.profile) {
    case MotionProfile::figure_eight_3d: {
      const double w = 2.0 * M_PI / 20.0;
      const Vec3 pos(8.0 * std::sin(w * t), 4.0 * std::sin(2.0 * w * t),
                     1.2 * std::sin(3.0 * w * t));
      const Quat q = quat_from_rpy(0.22 * std::sin(2.0 * w * t + 0.4),
                                   0.20 * std::sin(w * t + 1.1),
                                   0.80 * std::sin(w * t + 0.3));
      return Pose(t, q, pos);
    }
    case MotionProfile::planar_loop: {
      const double w = 2.0 * M_PI / 40.0;
      const double r = 10.0;
      const Vec3 pos(r * std::cos(w * t), r * std::sin(w * t), 0.0);
      return Pose(t, quat_from_rpy(0.0, 0.0, w * t + M_PI / 2.0), pos);
    }
    case MotionProfile::straight_line:
      return Pose(t, Quat::Identity(), Vec3(1.0 * t, 0.0, 0.0));
  }
  throw InvalidSpecError("unknown motion profile");
}

Pose true_pose_at(const ScenarioSpec& spec, double t) {
  const double dt = 1.0 / spec.rate;
  const int lo = std::max(0, static_cast<int>(std::floor(t / dt)));
  const Pose p0 = profile_pose(spec, lo * dt);
  const Pose p1 = profile_pose(spec, (lo + 1) * dt);
  if (std::abs(t - p0.t_stamp) < 1e-12) return p0;
  if (std::abs(t - p1.t_stamp) < 1e-12) return p1;
  return interpolate_pose(p0, p1, t);
}

CameraIntrinsics default_intrinsics() {
  CameraIntrinsics k;
  k.fx = 500.0;
  k.fy = 500.0;
  k.cx = 320.0;
  k.cy = 240.0;
  k.width = 640;
  k.height = 480;
  return k;
}

Pose default_rig() {
  // Rows map LiDAR axes (x fwd, y left, z up) onto camera axes (x right,
  // y down, z fwd).
  Mat3 r;
  r << 0.0, -1.0, 0.0,
       0.0, 0.0, -1.0,
       1.0, 0.0, 0.0;
  return Pose(0.0, Quat(r), Vec3(0.05, -0.06, -0.30));
}

Scenario generate_scenario(const ScenarioSpec& spec, const NoiseSpec& noise) {
  validate_spec(spec, noise);

  Scenario scenario;
  scenario.spec = spec;
  scenario.noise = noise;
  scenario.t_gt = spec.t_gt;

  const int n = static_cast<int>(std::llround(spec.duration * spec.rate));
  const double dt = 1.0 / spec.rate;
  const Pose calib_inv = inverse(spec.t_gt);
  // Fixed offset between the two odometry world frames; relative motions are
  // invariant to it.
  const Pose cam_world(0.0, quat_from_rpy(0.0, 0.0, 0.4), Vec3(2.0, -1.0, 0.5));

  std::vector<Pose> lidar_true(n);
  std::vector<Pose> cam_true(n);
  for (int i = 0; i < n; ++i) {
    lidar_true[i] = profile_pose(spec, i * dt);
    const double t_cam = (i + 0.5) * dt;
    cam_true[i] = compose(cam_world, compose(true_pose_at(spec, t_cam), calib_inv));
    cam_true[i].t_stamp = t_cam;
  }

  const double rot_sigma_rad = noise.odo_rot_sigma_deg * M_PI / 180.0;
  Rng lidar_rng(Rng::derive(spec.rng_seed, kStreamLidarNoise));
  Rng cam_rng(Rng::derive(spec.rng_seed, kStreamCamNoise));
  scenario.lidar =
      perturb_chain(lidar_true, 1.0, lidar_rng, rot_sigma_rad, noise.odo_trans_sigma, "lidar");
  scenario.cam = perturb_chain(cam_true, noise.cam_scale_drift, cam_rng, rot_sigma_rad,
                               noise.odo_trans_sigma, "cam");

  // World: uniform box with a ground plane. 30% of the points lie on z = 0.
  Rng world_rng(Rng::derive(spec.rng_seed, kStreamWorld));
  const double half = 0.5 * spec.world_extent;
  scenario.world_points.reserve(spec.world_point_count);
  for (int i = 0; i < spec.world_point_count; ++i) {
    const double x = world_rng.uniform(-half, half);
    const double y = world_rng.uniform(-half, half);
    const double z = (world_rng.uniform01() < 0.3)
                         ? 0.0
                         : world_rng.uniform(0.0, 0.15 * spec.world_extent);
    scenario.world_points.emplace_back(x, y, z);
  }

  // One sweep per LiDAR sample: points within the projectable depth window
  // through t_gt, expressed in the sensor frame at capture time.
  scenario.clouds.reserve(n);
  for (int i = 0; i < n; ++i) {
    PointCloudFrame cloud;
    cloud.frame_id = i;
    cloud.t_stamp = lidar_true[i].t_stamp;
    const Pose world_to_lidar = inverse(lidar_true[i]);
    for (const Vec3& pw : scenario.world_points) {
      const Vec3 pl = world_to_lidar.apply(pw);
      const double depth = spec.t_gt.apply(pl).z();
      if (depth >= kMinDepth && depth <= kMaxDepth) cloud.points.push_back(pl);
    }
    scenario.clouds.push_back(std::move(cloud));
  }

  if (spec.profile == MotionProfile::figure_eight_3d) {
    // The profile must excite at least two rotation axes.
    Eigen::MatrixXd axes(n - 1, 3);
    for (int i = 0; i + 1 < n; ++i)
      axes.row(i) =
          quat_log(compose(inverse(lidar_true[i]), lidar_true[i + 1]).rot).transpose();
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(axes);
    if (svd.singularValues()[1] <= 1e-3)
      throw InvalidSpecError("figure_eight_3d parameters failed the axis-diversity check");
  }
  return scenario;
}

std::vector<CorrespondenceSet> synth_correspondences(const Scenario& scenario,
                                                     const CameraIntrinsics& k,
                                                     const NoiseSpec& noise, int per_frame,
                                                     int frame_count, int* skipped_frames) {
  if (per_frame <= 0) throw InvalidSpecError("per_frame must be positive");
  const double lidar_t0 = scenario.lidar.poses.front().t_stamp;
  const double lidar_t1 = scenario.lidar.poses.back().t_stamp;

  std::vector<int> eligible;
  for (size_t j = 0; j < scenario.cam.poses.size(); ++j) {
    const double t = scenario.cam.poses[j].t_stamp;
    if (t >= lidar_t0 && t <= lidar_t1) eligible.push_back(static_cast<int>(j));
  }
  if (eligible.empty()) throw NoVisiblePointsError("no camera frame inside the LiDAR range");

  std::vector<int> selected;
  if (frame_count <= 0 || frame_count >= static_cast<int>(eligible.size())) {
    selected = eligible;
  } else {
    const int m = frame_count;
    const int n = static_cast<int>(eligible.size());
    for (int j = 0; j < m; ++j)
      selected.push_back(
          eligible[m == 1 ? 0
                          : static_cast<int>(std::llround(static_cast<double>(j) * (n - 1) /
                                                          (m - 1)))]);
  }

  const double margin = 3.0 * noise.pixel_sigma + 2.0;
  std::vector<CorrespondenceSet> sets;
  int skipped = 0;
  for (const int frame : selected) {
    const double t = scenario.cam.poses[frame].t_stamp;
    const Pose world_to_lidar = inverse(true_pose_at(scenario.spec, t));

    std::vector<CorrespondenceItem> visible;
    for (const Vec3& pw : scenario.world_points) {
      const Vec3 pl = world_to_lidar.apply(pw);
      const auto px = project_point(pl, k, scenario.t_gt);
      if (!px) continue;
      const double depth = scenario.t_gt.apply(pl).z();
      if (depth < kMinDepth || depth > kMaxDepth) continue;
      if (px->x() < margin || px->x() >= k.width - margin || px->y() < margin ||
          px->y() >= k.height - margin)
        continue;
      visible.push_back(CorrespondenceItem{pl, *px});
    }
    if (static_cast<int>(visible.size()) < 10) {
      ++skipped;
      continue;
    }

    Rng rng(Rng::derive(scenario.spec.rng_seed, kStreamFrameBase + frame));
    const int take = std::min<int>(per_frame, static_cast<int>(visible.size()));
    // partial Fisher-Yates
    std::vector<int> order(visible.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    for (int i = 0; i < take; ++i)
      std::swap(order[i], order[i + rng.uniform_index(order.size() - i)]);

    CorrespondenceSet set;
    set.frame_id = frame;
    for (int i = 0; i < take; ++i) {
      CorrespondenceItem item = visible[order[i]];
      if (noise.pixel_sigma > 0.0) {
        item.p_cmr.x() += rng.normal(0.0, noise.pixel_sigma);
        item.p_cmr.y() += rng.normal(0.0, noise.pixel_sigma);
      }
      if (noise.outlier_rate > 0.0 && rng.uniform01() < noise.outlier_rate) {
        item.p_cmr.x() += rng.uniform(-noise.outlier_max_offset, noise.outlier_max_offset);
        item.p_cmr.y() += rng.uniform(-noise.outlier_max_offset, noise.outlier_max_offset);
      }
      item.p_cmr.x() = std::clamp(item.p_cmr.x(), 0.0, k.width - 1.0);
      item.p_cmr.y() = std::clamp(item.p_cmr.y(), 0.0, k.height - 1.0);
      set.items.push_back(item);
    }
    sets.push_back(std::move(set));
  }
  if (skipped_frames) *skipped_frames = skipped;
  if (sets.empty())
    throw NoVisiblePointsError("every frame saw fewer than 10 projectable points");
  return sets;
}

CorrespondenceSet subsample(const CorrespondenceSet& set, double fraction, std::uint64_t seed) {
  if (fraction <= 0.0 || fraction > 1.0) throw ConfigError("fraction must be in (0, 1]");
  const int n = static_cast<int>(set.items.size());
  if (n == 0) return set;
  const int m = std::max<int>(1, static_cast<int>(std::llround(fraction * n)));
  if (m >= n) return set;

  Rng rng(seed);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  for (int i = 0; i < m; ++i)
    std::swap(order[i], order[i + rng.uniform_index(static_cast<std::uint64_t>(n - i))]);
  std::sort(order.begin(), order.begin() + m);

  CorrespondenceSet out;
  out.frame_id = set.frame_id;
  out.items.reserve(m);
  for (int i = 0; i < m; ++i) out.items.push_back(set.items[order[i]]);
  return out;
}

DatasetPaths write_dataset(const Scenario& scenario, const CameraIntrinsics& k,
                           const std::vector<CorrespondenceSet>& corr_sets,
                           const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "clouds");

  DatasetPaths paths;
  paths.cam_trajectory = (fs::path(dir) / "cam.txt").string();
  paths.lidar_trajectory = (fs::path(dir) / "lidar.txt").string();
  paths.intrinsics = (fs::path(dir) / "intrinsics.txt").string();
  paths.cloud_manifest = (fs::path(dir) / "clouds.csv").string();
  paths.correspondences = (fs::path(dir) / "correspondences.csv").string();
  paths.gt_calib = (fs::path(dir) / "gt_calib.json").string();
  paths.config = (fs::path(dir) / "run.cfg").string();

  write_trajectory(scenario.cam, paths.cam_trajectory);
  write_trajectory(scenario.lidar, paths.lidar_trajectory);
  write_intrinsics(k, paths.intrinsics);
  write_correspondences(corr_sets, paths.correspondences);

  std::vector<CloudManifestEntry> manifest;
  for (const auto& cloud : scenario.clouds) {
    char name[32];
    std::snprintf(name, sizeof(name), "clouds/%06d.xyz", cloud.frame_id);
    write_cloud(cloud, (fs::path(dir) / name).string());
    manifest.push_back(CloudManifestEntry{cloud.frame_id, cloud.t_stamp, name});
  }
  write_cloud_manifest(manifest, paths.cloud_manifest);

  CalibResult gt;
  gt.rotation = canonicalize(scenario.t_gt.rot);
  gt.rotation_matrix = scenario.t_gt.rot.toRotationMatrix();
  gt.translation = scenario.t_gt.trans;
  write_calib_result(gt, paths.gt_calib);

  std::string cfg;
  cfg += "cam_trajectory=cam.txt\n";
  cfg += "lidar_trajectory=lidar.txt\n";
  cfg += "intrinsics=intrinsics.txt\n";
  cfg += "correspondences=correspondences.csv\n";
  cfg += "cloud_manifest=clouds.csv\n";
  cfg += "reference_calib=gt_calib.json\n";
  cfg += "output=result.json\n";
  cfg += "seed=" + std::to_string(scenario.spec.rng_seed) + "\n";
  std::ofstream out(paths.config, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + paths.config + "'");
  out << cfg;

  return paths;
}

}  // namespace clcalib
