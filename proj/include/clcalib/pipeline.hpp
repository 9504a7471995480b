#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "clcalib/hand_eye.hpp"
#include "clcalib/metrics.hpp"
#include "clcalib/sync.hpp"

namespace clcalib {

/// Flat key=value configuration; every key can be overridden by a --key value
/// command-line flag. Relative paths in a config file are resolved against
/// the file's directory.
struct RunConfig {
  // inputs / outputs
  std::string cam_trajectory;
  std::string lidar_trajectory;
  std::string intrinsics;
  std::string correspondences;
  std::string cloud_manifest;   // optional, informational
  std::string reference_calib;  // optional, enables metric reporting
  std::string init_calib;       // required when stage == "fine"
  std::string output = "result.json";  // empty = do not write
  std::string run_log;                 // optional JSON-lines log

  std::string stage = "both";  // coarse | fine | both

  // synchronization
  double max_gap = kDefaultMaxGap;
  double min_motion = kDefaultMinMotion;
  double min_rot_deg = kDefaultMinRotDeg;
  int max_poses = 0;  // 0 = use all synced frames

  // residual weighting / robustifier
  ResidualOptions residuals;

  // coarse stage
  bool use_closed_form_rot_init = true;
  int min_pairs = 10;

  // fine stage
  double corr_fraction = 0.05;
  int max_pairs_used = 100;
  std::uint64_t seed = 0;
  bool include_motion_constraints = true;

  // solver
  SolveOptions solver;

  // reporting / validation
  RotationErrorConvention rotation_error_convention = RotationErrorConvention::paper;
  bool strict = false;  // observability warnings fail validation
  double max_skipped_corr_fraction = 0.01;
};

RunConfig load_run_config(const std::string& path);

/// Applies "--key value" style overrides; keys match the config file keys.
void apply_config_overrides(RunConfig& cfg,
                            const std::vector<std::pair<std::string, std::string>>& overrides);

struct PipelineOutcome {
  CalibResult result;
  CalibEstimate estimate;
  std::optional<MetricReport> metrics;
  SyncStats sync_stats;
  int motion_pairs = 0;
  double wall_time_s = 0.0;
  bool validation_passed = true;
  std::vector<std::string> validation_failures;
};

/// Full run: load -> synchronize -> coarse -> fine -> write result.
/// Deterministic for identical config and seed, independent of thread count.
PipelineOutcome run_pipeline(const RunConfig& cfg);

struct AblationOptions {
  RunConfig base;
  std::string sweep;  // pose_count | corr_fraction | pair_count | pairs_vs_fraction
  std::vector<double> values;
  std::vector<std::uint64_t> seeds;
  std::string out_csv;
  std::string aggregate_csv;  // empty = derived from out_csv
  int threads = 1;
};

struct AblationRow {
  double sweep_value = 0.0;
  std::uint64_t seed = 0;
  double e_t_cm = 0.0;
  double e_r_deg = 0.0;
  double wall_time_s = 0.0;
};

/// Runs every (value, seed) cell, writes the row CSV and an aggregate CSV
/// with per-value mean and standard deviation. Cells may execute on worker
/// threads; rows are emitted sorted by (value, seed), and the metric columns
/// do not depend on the worker count.
std::vector<AblationRow> run_ablation(const AblationOptions& opts);

}  // namespace clcalib
