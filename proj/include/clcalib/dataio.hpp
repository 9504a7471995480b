#pragma once

#include <optional>
#include <string>
#include <vector>

#include "clcalib/geometry.hpp"
#include "clcalib/metrics.hpp"

namespace clcalib {

struct Trajectory {
  std::string sensor_label;
  std::vector<Pose> poses;  // strictly increasing timestamps

  size_t size() const { return poses.size(); }
};

struct PointCloudFrame {
  int frame_id = 0;
  double t_stamp = 0.0;
  std::vector<Vec3> points;  // sensor frame, meters
};

struct CorrespondenceItem {
  Vec3 p_lidar = Vec3::Zero();  // 3D point, LiDAR frame at the paired camera time
  Vec2 p_cmr = Vec2::Zero();    // corrected pixel
};

struct CorrespondenceSet {
  int frame_id = 0;
  std::vector<CorrespondenceItem> items;
};

struct CloudManifestEntry {
  int frame_id = 0;
  double t_stamp = 0.0;
  std::string path;  // relative to the manifest file
};

struct ObservabilityEntry {
  Eigen::Matrix<double, 6, 1> direction = Eigen::Matrix<double, 6, 1>::Zero();
  double eigenvalue = 0.0;
};

struct CalibResult {
  Quat rotation = Quat::Identity();
  Mat3 rotation_matrix = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  std::vector<double> scales;
  double cost_rot = 0.0;
  double cost_trans = 0.0;
  double cost_corr = 0.0;
  std::vector<ObservabilityEntry> observability;
  std::optional<MetricReport> metrics;
};

struct ReadStats {
  int renormalized_quaternions = 0;
};

// Locale-independent numeric formatting ('.' decimal point, no separators).
std::string format_double(double v);        // shortest representation that round-trips
std::string format_double_10sig(double v);  // 10 significant digits, general format

/// One pose per line: "timestamp tx ty tz qx qy qz qw". '#' comment lines
/// are skipped. Quaternions off unit norm by more than 1e-3 are an error;
/// smaller deviations are renormalized and counted in `stats`.
Trajectory read_trajectory(const std::string& path, const std::string& sensor_label = "",
                           ReadStats* stats = nullptr);
void write_trajectory(const Trajectory& traj, const std::string& path);

/// CSV with header "frame_id,u,v,x,y,z"; rows grouped by frame_id in order of
/// first appearance. Frame ids are not validated here.
std::vector<CorrespondenceSet> read_correspondences(const std::string& path);
void write_correspondences(const std::vector<CorrespondenceSet>& sets, const std::string& path);

/// Checks every pixel against the declared image bounds and that no set is empty.
void validate_correspondences(const std::vector<CorrespondenceSet>& sets,
                              const CameraIntrinsics& k);

/// XYZ text, one "x y z" triple per line; id and timestamp come from the manifest.
PointCloudFrame read_cloud(const std::string& path, int frame_id, double t_stamp);
void write_cloud(const PointCloudFrame& cloud, const std::string& path);

/// CSV with header "frame_id,timestamp,path".
std::vector<CloudManifestEntry> read_cloud_manifest(const std::string& path);
void write_cloud_manifest(const std::vector<CloudManifestEntry>& entries,
                          const std::string& path);

/// Flat "key=value" lines with keys fx, fy, cx, cy, width, height.
CameraIntrinsics read_intrinsics(const std::string& path);
void write_intrinsics(const CameraIntrinsics& k, const std::string& path);

/// Fixed-key-order JSON document, all numbers at 10 significant digits.
/// write(read(write(r))) is byte-identical.
std::string serialize_calib_result(const CalibResult& r);
void write_calib_result(const CalibResult& r, const std::string& path);
CalibResult read_calib_result(const std::string& path);

}  // namespace clcalib
