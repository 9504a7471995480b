#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "clcalib/pipeline.hpp"
#include "clcalib/synth.hpp"

namespace {

using namespace clcalib;

std::vector<std::pair<std::string, std::string>> parse_overrides(
    const std::vector<std::string>& extras) {
  std::vector<std::pair<std::string, std::string>> overrides;
  for (size_t i = 0; i < extras.size(); ++i) {
    std::string key = extras[i];
    if (key.rfind("--", 0) != 0) throw ConfigError("expected --key, got '" + key + "'");
    key = key.substr(2);
    std::replace(key.begin(), key.end(), '-', '_');
    const size_t eq = key.find('=');
    if (eq != std::string::npos) {
      overrides.emplace_back(key.substr(0, eq), key.substr(eq + 1));
      continue;
    }
    if (i + 1 >= extras.size()) throw ConfigError("missing value for '--" + key + "'");
    overrides.emplace_back(key, extras[++i]);
  }
  return overrides;
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  size_t start = 0;
  while (start <= csv.size()) {
    const size_t end = csv.find(',', start);
    const std::string tok = csv.substr(start, end == std::string::npos ? end : end - start);
    if (!tok.empty()) out.push_back(std::stod(tok));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<std::uint64_t> out;
  for (const double v : parse_double_list(csv)) out.push_back(static_cast<std::uint64_t>(v));
  return out;
}

int cmd_calibrate(const std::string& config_path,
                  const std::vector<std::pair<std::string, std::string>>& overrides) {
  RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
  apply_config_overrides(cfg, overrides);
  const PipelineOutcome outcome = run_pipeline(cfg);

  std::printf("calibration: t = [%s, %s, %s] m, q(wxyz) = [%s, %s, %s, %s]\n",
              format_double(outcome.result.translation.x()).c_str(),
              format_double(outcome.result.translation.y()).c_str(),
              format_double(outcome.result.translation.z()).c_str(),
              format_double(outcome.result.rotation.w()).c_str(),
              format_double(outcome.result.rotation.x()).c_str(),
              format_double(outcome.result.rotation.y()).c_str(),
              format_double(outcome.result.rotation.z()).c_str());
  if (outcome.metrics)
    std::printf("errors vs reference: E_t = %.4f cm, E_R = %.4f deg (%s)\n",
                outcome.metrics->e_t_cm, outcome.metrics->e_r_deg,
                to_string(outcome.metrics->convention).c_str());
  for (const auto& warning : outcome.estimate.warnings)
    std::fprintf(stderr, "warning: %s\n", warning.c_str());
  for (const auto& warning : outcome.estimate.report.observability.warnings)
    std::fprintf(stderr, "warning: %s\n", warning.c_str());
  if (!outcome.validation_passed) {
    for (const auto& failure : outcome.validation_failures)
      std::fprintf(stderr, "validation: %s\n", failure.c_str());
    return static_cast<int>(ErrorFamily::validation);
  }
  return 0;
}

struct SynthArgs {
  std::string out_dir;
  std::uint64_t seed = 0;
  std::string profile = "figure_eight_3d";
  double duration = 60.0;
  double rate = 10.0;
  int world_points = 4000;
  double world_extent = 40.0;
  std::string gt_quat;   // "w,x,y,z", default rig when empty
  std::string gt_trans;  // "x,y,z"
  double odo_rot_sigma_deg = 0.0;
  double odo_trans_sigma = 0.0;
  double cam_scale_drift = 1.0;
  double pixel_sigma = 0.0;
  double outlier_rate = 0.0;
  double outlier_max_offset = 50.0;
  int per_frame = 200;
  int frames = 100;
};

int cmd_synth(const SynthArgs& args) {
  ScenarioSpec spec;
  spec.profile = motion_profile_from_string(args.profile);
  spec.duration = args.duration;
  spec.rate = args.rate;
  spec.world_point_count = args.world_points;
  spec.world_extent = args.world_extent;
  spec.rng_seed = args.seed;
  spec.t_gt = default_rig();
  if (!args.gt_quat.empty()) {
    const auto q = parse_double_list(args.gt_quat);
    if (q.size() != 4) throw ConfigError("--gt-quat expects w,x,y,z");
    spec.t_gt.rot = make_quat(q[0], q[1], q[2], q[3]);
  }
  if (!args.gt_trans.empty()) {
    const auto t = parse_double_list(args.gt_trans);
    if (t.size() != 3) throw ConfigError("--gt-trans expects x,y,z");
    spec.t_gt.trans = Vec3(t[0], t[1], t[2]);
  }

  NoiseSpec noise;
  noise.odo_rot_sigma_deg = args.odo_rot_sigma_deg;
  noise.odo_trans_sigma = args.odo_trans_sigma;
  noise.cam_scale_drift = args.cam_scale_drift;
  noise.pixel_sigma = args.pixel_sigma;
  noise.outlier_rate = args.outlier_rate;
  noise.outlier_max_offset = args.outlier_max_offset;

  const Scenario scenario = generate_scenario(spec, noise);
  const CameraIntrinsics k = default_intrinsics();
  int skipped = 0;
  const auto corr_sets =
      synth_correspondences(scenario, k, noise, args.per_frame, args.frames, &skipped);
  const DatasetPaths paths = write_dataset(scenario, k, corr_sets, args.out_dir);

  std::printf("dataset written to %s\n", args.out_dir.c_str());
  std::printf("  poses: %zu cam / %zu lidar, clouds: %zu, correspondence frames: %zu",
              scenario.cam.poses.size(), scenario.lidar.poses.size(), scenario.clouds.size(),
              corr_sets.size());
  if (skipped > 0) std::printf(" (%d frames skipped: too few visible points)", skipped);
  std::printf("\n  run: clcalib calibrate --config %s\n", paths.config.c_str());
  return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& sweep,
               const std::string& values_csv, const std::string& seeds_csv,
               const std::string& out_csv, const std::string& agg_csv, int threads,
               const std::vector<std::pair<std::string, std::string>>& overrides) {
  AblationOptions opts;
  opts.base = load_run_config(config_path);
  apply_config_overrides(opts.base, overrides);
  opts.sweep = sweep;
  opts.values = parse_double_list(values_csv);
  opts.seeds = parse_seed_list(seeds_csv);
  opts.out_csv = out_csv;
  opts.aggregate_csv = agg_csv;
  opts.threads = threads;
  const auto rows = run_ablation(opts);
  std::printf("%zu ablation cells written to %s\n", rows.size(), out_csv.c_str());
  return 0;
}

int cmd_metrics(const std::string& reference_path, const std::string& estimate_path,
                const std::string& convention) {
  const CalibResult reference = read_calib_result(reference_path);
  const CalibResult estimate = read_calib_result(estimate_path);
  const MetricReport m =
      compute_metrics(reference.translation, reference.rotation, estimate.translation,
                      estimate.rotation, rotation_convention_from_string(convention));
  std::printf("{\"e_t_cm\": %s, \"e_r_deg\": %s, \"translation_axes_cm\": [%s, %s, %s], "
              "\"rotation_axes_deg\": [%s, %s, %s], \"gimbal_warning\": %s, "
              "\"convention\": \"%s\"}\n",
              format_double_10sig(m.e_t_cm).c_str(), format_double_10sig(m.e_r_deg).c_str(),
              format_double_10sig(m.translation_axes_cm.x()).c_str(),
              format_double_10sig(m.translation_axes_cm.y()).c_str(),
              format_double_10sig(m.translation_axes_cm.z()).c_str(),
              format_double_10sig(m.rotation_axes_deg.x()).c_str(),
              format_double_10sig(m.rotation_axes_deg.y()).c_str(),
              format_double_10sig(m.rotation_axes_deg.z()).c_str(),
              m.gimbal_warning ? "true" : "false", to_string(m.convention).c_str());
  return 0;
}

int cmd_check_gradients(std::uint64_t seed, int samples, double tolerance) {
  const GradientCheckReport report = check_gradients(seed, samples, tolerance);
  std::printf("gradient check over %d random states (tolerance %g):\n", report.samples,
              report.tolerance);
  std::printf("  rot   max relative error %.3e %s\n", report.max_rel_rot,
              report.max_rel_rot <= tolerance ? "ok" : "FAIL");
  std::printf("  trans max relative error %.3e %s\n", report.max_rel_trans,
              report.max_rel_trans <= tolerance ? "ok" : "FAIL");
  std::printf("  corr  max relative error %.3e %s\n", report.max_rel_corr,
              report.max_rel_corr <= tolerance ? "ok" : "FAIL");
  return report.passed() ? 0 : static_cast<int>(ErrorFamily::validation);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Camera-LiDAR extrinsic calibration from odometry alignment and "
               "2D-3D point correspondences"};
  app.require_subcommand(1);

  // calibrate
  auto* calibrate = app.add_subcommand("calibrate", "Run the calibration pipeline");
  calibrate->allow_extras();
  std::string cal_config;
  calibrate->add_option("--config", cal_config, "key=value config file");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  SynthArgs synth_args;
  synth->add_option("--out", synth_args.out_dir, "output directory")->required();
  synth->add_option("--seed", synth_args.seed, "RNG seed")->required();
  synth->add_option("--profile", synth_args.profile,
                    "figure_eight_3d | planar_loop | straight_line");
  synth->add_option("--duration", synth_args.duration, "trajectory length [s]");
  synth->add_option("--rate", synth_args.rate, "sampling rate [Hz]");
  synth->add_option("--world-points", synth_args.world_points, "world point count");
  synth->add_option("--world-extent", synth_args.world_extent, "world box edge [m]");
  synth->add_option("--gt-quat", synth_args.gt_quat, "ground-truth rotation w,x,y,z");
  synth->add_option("--gt-trans", synth_args.gt_trans, "ground-truth translation x,y,z [m]");
  synth->add_option("--odo-rot-sigma", synth_args.odo_rot_sigma_deg,
                    "odometry rotation noise per motion [deg]");
  synth->add_option("--odo-trans-sigma", synth_args.odo_trans_sigma,
                    "odometry translation noise per motion [m]");
  synth->add_option("--cam-scale-drift", synth_args.cam_scale_drift,
                    "camera translation drift factor per pair");
  synth->add_option("--pixel-sigma", synth_args.pixel_sigma, "pixel noise [px]");
  synth->add_option("--outlier-rate", synth_args.outlier_rate, "correspondence outlier rate");
  synth->add_option("--outlier-max-offset", synth_args.outlier_max_offset,
                    "max outlier offset [px]");
  synth->add_option("--per-frame", synth_args.per_frame, "correspondences per frame");
  synth->add_option("--frames", synth_args.frames, "correspondence frame count (0 = all)");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "Sweep a parameter over seeded runs");
  ablate->allow_extras();
  std::string abl_config, abl_sweep, abl_values, abl_seeds, abl_out, abl_agg;
  int abl_threads = 1;
  ablate->add_option("--config", abl_config, "base config file")->required();
  ablate->add_option("--sweep", abl_sweep,
                     "pose_count | corr_fraction | pair_count | pairs_vs_fraction")
      ->required();
  ablate->add_option("--values", abl_values, "comma-separated sweep values")->required();
  ablate->add_option("--seeds", abl_seeds, "comma-separated seeds")->required();
  ablate->add_option("--out", abl_out, "row CSV path")->required();
  ablate->add_option("--agg-out", abl_agg, "aggregate CSV path (default <out>_agg.csv)");
  ablate->add_option("--threads", abl_threads, "worker threads over cells");

  // metrics
  auto* metrics = app.add_subcommand("metrics", "Compare two calibration files");
  std::string met_ref, met_est, met_conv = "paper";
  metrics->add_option("--reference", met_ref, "reference calibration JSON")->required();
  metrics->add_option("--estimate", met_est, "estimated calibration JSON")->required();
  metrics->add_option("--convention", met_conv, "paper | full_angle");

  // check-gradients
  auto* check = app.add_subcommand("check-gradients",
                                   "Verify analytic Jacobians against finite differences");
  std::uint64_t chk_seed = 7;
  int chk_samples = 100;
  double chk_tolerance = 1e-5;
  check->add_option("--seed", chk_seed, "RNG seed");
  check->add_option("--samples", chk_samples, "random states per residual kind");
  check->add_option("--tolerance", chk_tolerance, "max relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(clcalib::ErrorFamily::config);
  }

  try {
    if (calibrate->parsed())
      return cmd_calibrate(cal_config, parse_overrides(calibrate->remaining()));
    if (synth->parsed()) return cmd_synth(synth_args);
    if (ablate->parsed())
      return cmd_ablate(abl_config, abl_sweep, abl_values, abl_seeds, abl_out, abl_agg,
                        abl_threads, parse_overrides(ablate->remaining()));
    if (metrics->parsed()) return cmd_metrics(met_ref, met_est, met_conv);
    if (check->parsed()) return cmd_check_gradients(chk_seed, chk_samples, chk_tolerance);
  } catch (const clcalib::CalibError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
