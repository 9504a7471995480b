#include "clcalib/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

#include <json.hpp>

namespace clcalib {

namespace {

namespace fs = std::filesystem;

double to_double(const std::string& key, const std::string& value) {
  double out;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError("bad numeric value for '" + key + "': '" + value + "'");
  return out;
}

int to_int(const std::string& key, const std::string& value) {
  int out;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError("bad integer value for '" + key + "': '" + value + "'");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  std::uint64_t out;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError("bad seed value for '" + key + "': '" + value + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw ConfigError("bad boolean value for '" + key + "': '" + value + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& config_setters() {
  static const std::map<std::string, Setter> setters = {
      {"cam_trajectory", [](RunConfig& c, const std::string&, const std::string& v) { c.cam_trajectory = v; }},
      {"lidar_trajectory", [](RunConfig& c, const std::string&, const std::string& v) { c.lidar_trajectory = v; }},
      {"intrinsics", [](RunConfig& c, const std::string&, const std::string& v) { c.intrinsics = v; }},
      {"correspondences", [](RunConfig& c, const std::string&, const std::string& v) { c.correspondences = v; }},
      {"cloud_manifest", [](RunConfig& c, const std::string&, const std::string& v) { c.cloud_manifest = v; }},
      {"reference_calib", [](RunConfig& c, const std::string&, const std::string& v) { c.reference_calib = v; }},
      {"init_calib", [](RunConfig& c, const std::string&, const std::string& v) { c.init_calib = v; }},
      {"output", [](RunConfig& c, const std::string&, const std::string& v) { c.output = v; }},
      {"run_log", [](RunConfig& c, const std::string&, const std::string& v) { c.run_log = v; }},
      {"stage",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v != "coarse" && v != "fine" && v != "both")
           throw ConfigError("'" + k + "' must be coarse, fine, or both");
         c.stage = v;
       }},
      {"max_gap", [](RunConfig& c, const std::string& k, const std::string& v) { c.max_gap = to_double(k, v); }},
      {"min_motion", [](RunConfig& c, const std::string& k, const std::string& v) { c.min_motion = to_double(k, v); }},
      {"min_rot_deg", [](RunConfig& c, const std::string& k, const std::string& v) { c.min_rot_deg = to_double(k, v); }},
      {"max_poses", [](RunConfig& c, const std::string& k, const std::string& v) { c.max_poses = to_int(k, v); }},
      {"sigma_rot", [](RunConfig& c, const std::string& k, const std::string& v) { c.residuals.sigma_rot = to_double(k, v); }},
      {"sigma_trans", [](RunConfig& c, const std::string& k, const std::string& v) { c.residuals.sigma_trans = to_double(k, v); }},
      {"sigma_px", [](RunConfig& c, const std::string& k, const std::string& v) { c.residuals.sigma_px = to_double(k, v); }},
      {"robustifier",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "cauchy")
           c.residuals.use_cauchy = true;
         else if (v == "none")
           c.residuals.use_cauchy = false;
         else
           throw ConfigError("'" + k + "' must be cauchy or none");
       }},
      {"cauchy_rot", [](RunConfig& c, const std::string& k, const std::string& v) { c.residuals.cauchy_rot = to_double(k, v); }},
      {"cauchy_trans", [](RunConfig& c, const std::string& k, const std::string& v) { c.residuals.cauchy_trans = to_double(k, v); }},
      {"cauchy_corr", [](RunConfig& c, const std::string& k, const std::string& v) { c.residuals.cauchy_corr = to_double(k, v); }},
      {"depth_epsilon", [](RunConfig& c, const std::string& k, const std::string& v) { c.residuals.depth_epsilon = to_double(k, v); }},
      {"shared_scale", [](RunConfig& c, const std::string& k, const std::string& v) { c.residuals.shared_scale = to_bool(k, v); }},
      {"use_closed_form_rot_init", [](RunConfig& c, const std::string& k, const std::string& v) { c.use_closed_form_rot_init = to_bool(k, v); }},
      {"min_pairs", [](RunConfig& c, const std::string& k, const std::string& v) { c.min_pairs = to_int(k, v); }},
      {"corr_fraction", [](RunConfig& c, const std::string& k, const std::string& v) { c.corr_fraction = to_double(k, v); }},
      {"max_pairs_used", [](RunConfig& c, const std::string& k, const std::string& v) { c.max_pairs_used = to_int(k, v); }},
      {"seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.seed = to_u64(k, v); }},
      {"include_motion_constraints", [](RunConfig& c, const std::string& k, const std::string& v) { c.include_motion_constraints = to_bool(k, v); }},
      {"lm_max_iterations", [](RunConfig& c, const std::string& k, const std::string& v) { c.solver.max_iterations = to_int(k, v); }},
      {"lm_gradient_tolerance", [](RunConfig& c, const std::string& k, const std::string& v) { c.solver.gradient_tolerance = to_double(k, v); }},
      {"lm_cost_change_tolerance", [](RunConfig& c, const std::string& k, const std::string& v) { c.solver.cost_change_tolerance = to_double(k, v); }},
      {"lm_initial_damping", [](RunConfig& c, const std::string& k, const std::string& v) { c.solver.initial_damping = to_double(k, v); }},
      {"observability_ratio_threshold", [](RunConfig& c, const std::string& k, const std::string& v) { c.solver.observability_ratio_threshold = to_double(k, v); }},
      {"parallel", [](RunConfig& c, const std::string& k, const std::string& v) { c.solver.parallel = to_bool(k, v); }},
      {"rotation_error_convention", [](RunConfig& c, const std::string&, const std::string& v) { c.rotation_error_convention = rotation_convention_from_string(v); }},
      {"strict", [](RunConfig& c, const std::string& k, const std::string& v) { c.strict = to_bool(k, v); }},
      {"max_skipped_corr_fraction", [](RunConfig& c, const std::string& k, const std::string& v) { c.max_skipped_corr_fraction = to_double(k, v); }},
  };
  return setters;
}

void set_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto& setters = config_setters();
  const auto it = setters.find(key);
  if (it == setters.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(cfg, key, value);
}

std::string resolve_against(const fs::path& base, const std::string& p) {
  if (p.empty()) return p;
  fs::path path(p);
  if (path.is_absolute()) return p;
  return (base / path).lexically_normal().string();
}

void resolve_paths(RunConfig& cfg, const fs::path& base) {
  for (std::string* p : {&cfg.cam_trajectory, &cfg.lidar_trajectory, &cfg.intrinsics,
                         &cfg.correspondences, &cfg.cloud_manifest, &cfg.reference_calib,
                         &cfg.init_calib, &cfg.output, &cfg.run_log})
    *p = resolve_against(base, *p);
}

void require_exists(const std::string& what, const std::string& path) {
  if (path.empty()) throw ConfigError("missing required config key '" + what + "'");
  if (!fs::exists(path)) throw IoError(what + " file not found: '" + path + "'");
}

class RunLogger {
 public:
  explicit RunLogger(const std::string& path) {
    if (!path.empty()) {
      out_.open(path, std::ios::binary | std::ios::trunc);
      if (!out_) throw IoError("cannot open run log '" + path + "'");
    }
  }

  void log(const nlohmann::ordered_json& j) {
    if (out_.is_open()) out_ << j.dump() << "\n";
  }

 private:
  std::ofstream out_;
};

nlohmann::ordered_json observability_json(const ObservabilityReport& report) {
  nlohmann::ordered_json j;
  j["flagged_rotation"] = report.flagged_rotation;
  j["flagged_translation"] = report.flagged_translation;
  j["warnings"] = report.warnings;
  return j;
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path + "'");
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key=value");
    set_config_key(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
  resolve_paths(cfg, fs::path(path).parent_path());
  return cfg;
}

void apply_config_overrides(RunConfig& cfg,
                            const std::vector<std::pair<std::string, std::string>>& overrides) {
  for (const auto& [key, value] : overrides) set_config_key(cfg, key, value);
}

PipelineOutcome run_pipeline(const RunConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();
  const bool run_coarse = cfg.stage == "coarse" || cfg.stage == "both";
  const bool run_fine = cfg.stage == "fine" || cfg.stage == "both";

  require_exists("cam_trajectory", cfg.cam_trajectory);
  require_exists("lidar_trajectory", cfg.lidar_trajectory);
  if (run_fine) {
    require_exists("correspondences", cfg.correspondences);
    require_exists("intrinsics", cfg.intrinsics);
  }
  if (!cfg.reference_calib.empty()) require_exists("reference_calib", cfg.reference_calib);
  if (cfg.stage == "fine") require_exists("init_calib", cfg.init_calib);

  RunLogger logger(cfg.run_log);
  PipelineOutcome outcome;

  ReadStats cam_stats, lidar_stats;
  const Trajectory cam = read_trajectory(cfg.cam_trajectory, "cam", &cam_stats);
  const Trajectory lidar = read_trajectory(cfg.lidar_trajectory, "lidar", &lidar_stats);
  logger.log({{"event", "trajectories_loaded"},
              {"cam_poses", cam.poses.size()},
              {"lidar_poses", lidar.poses.size()},
              {"cam_renormalized", cam_stats.renormalized_quaternions},
              {"lidar_renormalized", lidar_stats.renormalized_quaternions}});
  if (!cfg.cloud_manifest.empty()) {
    require_exists("cloud_manifest", cfg.cloud_manifest);
    const auto manifest = read_cloud_manifest(cfg.cloud_manifest);
    logger.log({{"event", "cloud_manifest_loaded"}, {"clouds", manifest.size()}});
  }

  std::vector<SyncedFrame> frames =
      pair_trajectories(cam, lidar, cfg.max_gap, &outcome.sync_stats);
  if (cfg.max_poses > 0 && static_cast<int>(frames.size()) > cfg.max_poses)
    frames.resize(cfg.max_poses);
  const std::vector<MotionPair> pairs =
      relative_motions(frames, cfg.min_motion, cfg.min_rot_deg, &outcome.sync_stats);
  outcome.motion_pairs = static_cast<int>(pairs.size());
  logger.log({{"event", "synchronized"},
              {"synced_frames", frames.size()},
              {"dropped_gap", outcome.sync_stats.dropped_gap},
              {"dropped_stationary", outcome.sync_stats.dropped_stationary},
              {"motion_pairs", pairs.size()}});

  CalibEstimate estimate;
  if (run_coarse) {
    CoarseOptions coarse_opts;
    coarse_opts.use_closed_form_rot_init = cfg.use_closed_form_rot_init;
    coarse_opts.min_pairs = cfg.min_pairs;
    coarse_opts.residuals = cfg.residuals;
    coarse_opts.solver = cfg.solver;
    estimate = coarse_calibrate(pairs, coarse_opts);
    logger.log({{"event", "coarse_done"},
                {"iterations", estimate.report.iterations},
                {"initial_cost", estimate.report.initial_cost},
                {"final_cost", estimate.report.final_cost},
                {"termination", estimate.report.termination},
                {"warnings", estimate.warnings},
                {"observability", observability_json(estimate.report.observability)}});
  }

  if (run_fine) {
    Pose t_init;
    if (run_coarse) {
      t_init = estimate.pose();
    } else {
      const CalibResult init = read_calib_result(cfg.init_calib);
      t_init = Pose(0.0, init.rotation, init.translation);
    }
    const CameraIntrinsics k = read_intrinsics(cfg.intrinsics);
    const std::vector<CorrespondenceSet> corr_sets = read_correspondences(cfg.correspondences);
    validate_correspondences(corr_sets, k);

    FineOptions fine_opts;
    fine_opts.correspondence_fraction = cfg.corr_fraction;
    fine_opts.max_pairs_used = cfg.max_pairs_used;
    fine_opts.rng_seed = cfg.seed;
    fine_opts.include_motion_constraints = cfg.include_motion_constraints;
    fine_opts.residuals = cfg.residuals;
    fine_opts.solver = cfg.solver;
    const std::vector<std::string> coarse_warnings = estimate.warnings;
    estimate = fine_calibrate(pairs, corr_sets, k, t_init, fine_opts);
    estimate.warnings.insert(estimate.warnings.begin(), coarse_warnings.begin(),
                             coarse_warnings.end());
    logger.log({{"event", "fine_done"},
                {"iterations", estimate.report.iterations},
                {"initial_cost", estimate.report.initial_cost},
                {"final_cost", estimate.report.final_cost},
                {"termination", estimate.report.termination},
                {"corr_blocks", estimate.report.corr_blocks},
                {"skipped_corr", estimate.report.skipped_corr},
                {"observability", observability_json(estimate.report.observability)}});
  }

  // Validation: skipped-block quota always applies; observability flags only
  // under --strict.
  if (estimate.report.corr_blocks > 0) {
    const double skipped_fraction = static_cast<double>(estimate.report.skipped_corr) /
                                    static_cast<double>(estimate.report.corr_blocks);
    if (skipped_fraction > cfg.max_skipped_corr_fraction)
      outcome.validation_failures.push_back(
          "skipped correspondence fraction " + format_double(skipped_fraction) +
          " exceeds quota " + format_double(cfg.max_skipped_corr_fraction));
  }
  if (cfg.strict && estimate.report.observability.flagged() > 0)
    outcome.validation_failures.push_back(
        "observability flagged " + std::to_string(estimate.report.observability.flagged()) +
        " weak direction(s) under strict mode");
  outcome.validation_passed = outcome.validation_failures.empty();

  if (!cfg.reference_calib.empty()) {
    const CalibResult reference = read_calib_result(cfg.reference_calib);
    outcome.metrics =
        compute_metrics(reference.translation, reference.rotation, estimate.translation,
                        estimate.rotation, cfg.rotation_error_convention);
    logger.log({{"event", "metrics"},
                {"e_t_cm", outcome.metrics->e_t_cm},
                {"e_r_deg", outcome.metrics->e_r_deg},
                {"convention", to_string(outcome.metrics->convention)}});
  }

  outcome.result.rotation = canonicalize(estimate.rotation);
  outcome.result.rotation_matrix = outcome.result.rotation.toRotationMatrix();
  outcome.result.translation = estimate.translation;
  outcome.result.scales = estimate.scales;
  outcome.result.cost_rot = estimate.report.breakdown.rot;
  outcome.result.cost_trans = estimate.report.breakdown.trans;
  outcome.result.cost_corr = estimate.report.breakdown.corr;
  outcome.result.observability = estimate.report.observability.spectrum;
  outcome.result.metrics = outcome.metrics;
  outcome.estimate = std::move(estimate);

  if (!cfg.output.empty()) {
    write_calib_result(outcome.result, cfg.output);
    logger.log({{"event", "result_written"}, {"path", cfg.output}});
  }
  for (const auto& failure : outcome.validation_failures)
    logger.log({{"event", "validation_failure"}, {"reason", failure}});

  outcome.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return outcome;
}

std::vector<AblationRow> run_ablation(const AblationOptions& opts) {
  if (opts.base.reference_calib.empty())
    throw ConfigError("ablation requires reference_calib to compute errors");
  if (opts.values.empty() || opts.seeds.empty())
    throw ConfigError("ablation needs at least one sweep value and one seed");
  const bool known = opts.sweep == "pose_count" || opts.sweep == "corr_fraction" ||
                     opts.sweep == "pair_count" || opts.sweep == "pairs_vs_fraction";
  if (!known) throw ConfigError("unknown sweep '" + opts.sweep + "'");

  struct Cell {
    double value;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const double value : opts.values)
    for (const std::uint64_t seed : opts.seeds) cells.push_back({value, seed});

  std::vector<AblationRow> rows(cells.size());
  std::vector<std::string> errors(cells.size());

#pragma omp parallel for schedule(dynamic) num_threads(std::max(opts.threads, 1))
  for (int i = 0; i < static_cast<int>(cells.size()); ++i) {
    try {
      RunConfig cfg = opts.base;
      cfg.output.clear();
      cfg.run_log.clear();
      cfg.seed = cells[i].seed;
      if (opts.sweep == "pose_count") {
        cfg.max_poses = static_cast<int>(cells[i].value);
      } else if (opts.sweep == "corr_fraction") {
        cfg.corr_fraction = cells[i].value;
      } else if (opts.sweep == "pair_count") {
        cfg.max_pairs_used = static_cast<int>(cells[i].value);
      } else {  // pairs_vs_fraction: constant correspondence budget
        cfg.max_pairs_used = static_cast<int>(cells[i].value);
        cfg.corr_fraction = opts.base.corr_fraction *
                            static_cast<double>(opts.base.max_pairs_used) / cells[i].value;
      }
      const PipelineOutcome outcome = run_pipeline(cfg);
      rows[i] = {cells[i].value, cells[i].seed, outcome.metrics->e_t_cm,
                 outcome.metrics->e_r_deg, outcome.wall_time_s};
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& err : errors)
    if (!err.empty()) throw ValidationError("ablation cell failed: " + err);

  std::sort(rows.begin(), rows.end(), [](const AblationRow& a, const AblationRow& b) {
    return a.sweep_value != b.sweep_value ? a.sweep_value < b.sweep_value : a.seed < b.seed;
  });

  if (!opts.out_csv.empty()) {
    std::ofstream out(opts.out_csv, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + opts.out_csv + "'");
    out << "sweep_value,seed,e_t_cm,e_r_deg,wall_time_s\n";
    for (const auto& r : rows)
      out << format_double(r.sweep_value) << "," << r.seed << "," << format_double(r.e_t_cm)
          << "," << format_double(r.e_r_deg) << "," << format_double(r.wall_time_s) << "\n";

    std::string agg_path = opts.aggregate_csv;
    if (agg_path.empty()) {
      agg_path = opts.out_csv;
      const size_t dot = agg_path.rfind('.');
      agg_path = (dot == std::string::npos ? agg_path : agg_path.substr(0, dot)) + "_agg.csv";
    }
    std::ofstream agg(agg_path, std::ios::binary | std::ios::trunc);
    if (!agg) throw IoError("cannot write '" + agg_path + "'");
    agg << "sweep_value,n,e_t_cm_mean,e_t_cm_std,e_r_deg_mean,e_r_deg_std,wall_time_s_mean\n";
    for (const double value : opts.values) {
      std::vector<const AblationRow*> group;
      for (const auto& r : rows)
        if (r.sweep_value == value) group.push_back(&r);
      const double n = static_cast<double>(group.size());
      double mt = 0, mr = 0, mw = 0;
      for (const auto* r : group) {
        mt += r->e_t_cm;
        mr += r->e_r_deg;
        mw += r->wall_time_s;
      }
      mt /= n;
      mr /= n;
      mw /= n;
      double st = 0, sr = 0;
      for (const auto* r : group) {
        st += (r->e_t_cm - mt) * (r->e_t_cm - mt);
        sr += (r->e_r_deg - mr) * (r->e_r_deg - mr);
      }
      const double denom = group.size() > 1 ? n - 1.0 : 1.0;
      st = std::sqrt(st / denom);
      sr = std::sqrt(sr / denom);
      agg << format_double(value) << "," << group.size() << "," << format_double(mt) << ","
          << format_double(st) << "," << format_double(mr) << "," << format_double(sr) << ","
          << format_double(mw) << "\n";
    }
  }
  return rows;
}

}  // namespace clcalib
