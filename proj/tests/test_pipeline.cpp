#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "clcalib/pipeline.hpp"
#include "clcalib/synth.hpp"
#include "test_util.hpp"

using namespace clcalib;
using namespace testutil;

namespace {

namespace fs = std::filesystem;

struct TestDataset {
  fs::path dir;
  DatasetPaths paths;
  Pose t_gt;
};

// One small noisy dataset shared by the pipeline cases.
const TestDataset& dataset() {
  static const TestDataset ds = [] {
    TestDataset out;
    out.dir = fs::temp_directory_path() / "clcalib_pipeline_ds";
    fs::remove_all(out.dir);
    ScenarioSpec spec;
    spec.t_gt = default_rig();
    spec.profile = MotionProfile::figure_eight_3d;
    spec.duration = 12.0;
    spec.rng_seed = 500;
    spec.world_point_count = 1500;
    NoiseSpec noise;
    noise.pixel_sigma = 0.5;
    noise.odo_rot_sigma_deg = 0.02;
    noise.odo_trans_sigma = 0.002;
    noise.cam_scale_drift = 1.0005;
    const Scenario scenario = generate_scenario(spec, noise);
    const CameraIntrinsics k = default_intrinsics();
    const auto sets = synth_correspondences(scenario, k, noise, 60, 20);
    out.paths = write_dataset(scenario, k, sets, out.dir.string());
    out.t_gt = scenario.t_gt;
    return out;
  }();
  return ds;
}

RunConfig base_config(const std::string& tag) {
  RunConfig cfg = load_run_config(dataset().paths.config);
  cfg.output = (dataset().dir / ("result_" + tag + ".json")).string();
  cfg.run_log = (dataset().dir / ("log_" + tag + ".jsonl")).string();
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CLCALIB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config files load, resolve paths, and take overrides") {
  const RunConfig cfg = load_run_config(dataset().paths.config);
  CHECK(fs::path(cfg.cam_trajectory).is_absolute());
  CHECK(fs::exists(cfg.cam_trajectory));
  CHECK(cfg.reference_calib == dataset().paths.gt_calib);
  CHECK(cfg.seed == 500);

  RunConfig overridden = cfg;
  apply_config_overrides(overridden, {{"corr_fraction", "0.25"},
                                      {"stage", "coarse"},
                                      {"robustifier", "none"},
                                      {"seed", "42"}});
  CHECK(overridden.corr_fraction == 0.25);
  CHECK(overridden.stage == "coarse");
  CHECK(!overridden.residuals.use_cauchy);
  CHECK(overridden.seed == 42);

  CHECK_THROWS_AS(apply_config_overrides(overridden, {{"no_such_key", "1"}}), ConfigError);
  CHECK_THROWS_AS(apply_config_overrides(overridden, {{"corr_fraction", "abc"}}), ConfigError);
  CHECK_THROWS_AS(apply_config_overrides(overridden, {{"stage", "warp"}}), ConfigError);
}

TEST_CASE("full pipeline recovers the rig and writes a result") {
  RunConfig cfg = base_config("full");
  const PipelineOutcome outcome = run_pipeline(cfg);

  CHECK(outcome.validation_passed);
  REQUIRE(outcome.metrics.has_value());
  CHECK(outcome.metrics->e_t_cm < 2.0);
  CHECK(outcome.metrics->e_r_deg < 0.1);
  CHECK(outcome.motion_pairs > 100);
  CHECK(fs::exists(cfg.output));

  const CalibResult written = read_calib_result(cfg.output);
  CHECK((written.translation - outcome.result.translation).norm() < 1e-9);
  REQUIRE(written.metrics.has_value());
  CHECK(written.observability.size() == 6);

  // run log is JSON lines with the expected events
  const std::string log = slurp(cfg.run_log);
  for (const char* event : {"trajectories_loaded", "synchronized", "coarse_done", "fine_done",
                            "metrics", "result_written"})
    CHECK(log.find(event) != std::string::npos);
}

TEST_CASE("pipeline is deterministic for identical config and seed") {
  RunConfig cfg_a = base_config("det_a");
  run_pipeline(cfg_a);
  const std::string first_result = slurp(cfg_a.output);
  const std::string first_log = slurp(cfg_a.run_log);
  run_pipeline(cfg_a);
  CHECK(slurp(cfg_a.output) == first_result);
  CHECK(slurp(cfg_a.run_log) == first_log);

  // and across solver thread-count settings
  RunConfig cfg_serial = base_config("det_serial");
  cfg_serial.solver.parallel = false;
  run_pipeline(cfg_serial);
  CHECK(slurp(cfg_serial.output) == first_result);
}

TEST_CASE("coarse-only stage skips correspondences") {
  RunConfig cfg = base_config("coarse");
  cfg.stage = "coarse";
  cfg.correspondences.clear();
  cfg.intrinsics.clear();
  const PipelineOutcome outcome = run_pipeline(cfg);
  REQUIRE(outcome.metrics.has_value());
  CHECK(outcome.metrics->e_r_deg < 0.5);  // sub-degree from motion alone
  CHECK(outcome.estimate.report.corr_blocks == 0);
}

TEST_CASE("fine-only stage starts from a supplied initialization") {
  RunConfig cfg = base_config("fineonly");
  cfg.stage = "fine";
  SUBCASE("missing init_calib is a config error") {
    CHECK_THROWS_AS(run_pipeline(cfg), ConfigError);
  }
  SUBCASE("with init_calib the stage runs") {
    cfg.init_calib = dataset().paths.gt_calib;
    const PipelineOutcome outcome = run_pipeline(cfg);
    REQUIRE(outcome.metrics.has_value());
    CHECK(outcome.metrics->e_t_cm < 2.0);
  }
}

TEST_CASE("missing input files map to the io error family") {
  RunConfig cfg = base_config("missing");
  cfg.cam_trajectory = (dataset().dir / "nope.txt").string();
  try {
    run_pipeline(cfg);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(e.exit_code() == 3);
    CHECK(!fs::exists(cfg.output));  // no partial output
  }
}

TEST_CASE("skipped-correspondence quota fails validation") {
  // Append one correspondence whose 3D point sits behind the camera at the
  // solution; with fraction 1.0 it is always selected and always skipped.
  const fs::path corr_path = dataset().dir / "correspondences_bad.csv";
  fs::copy_file(dataset().paths.correspondences, corr_path,
                fs::copy_options::overwrite_existing);
  {
    std::ofstream out(corr_path, std::ios::app | std::ios::binary);
    out << "0,320,240,-50,0,0\n";  // x is forward in the LiDAR frame
    out << "0,321,241,-60,0,0\n";
  }
  RunConfig cfg = base_config("quota");
  cfg.correspondences = corr_path.string();
  cfg.corr_fraction = 1.0;
  cfg.max_pairs_used = 1;  // only frame 0: 2 skipped of ~62 exceeds the 1% quota
  const PipelineOutcome outcome = run_pipeline(cfg);
  CHECK(!outcome.validation_passed);
  REQUIRE(!outcome.validation_failures.empty());
  CHECK(outcome.validation_failures.front().find("skipped") != std::string::npos);
  CHECK(fs::exists(cfg.output));  // result still written; exit code signals it
}

TEST_CASE("strict mode turns observability flags into validation failures") {
  const fs::path dir = fs::temp_directory_path() / "clcalib_planar_ds";
  fs::remove_all(dir);
  ScenarioSpec spec;
  spec.t_gt = default_rig();
  spec.profile = MotionProfile::planar_loop;
  spec.duration = 12.0;
  spec.rng_seed = 501;
  spec.world_point_count = 1200;
  const Scenario scenario = generate_scenario(spec);
  const CameraIntrinsics k = default_intrinsics();
  const auto sets = synth_correspondences(scenario, k, NoiseSpec{}, 40, 10);
  const DatasetPaths paths = write_dataset(scenario, k, sets, dir.string());

  RunConfig cfg = load_run_config(paths.config);
  cfg.stage = "coarse";
  cfg.output = (dir / "result.json").string();
  cfg.strict = true;
  const PipelineOutcome outcome = run_pipeline(cfg);
  CHECK(outcome.estimate.report.observability.flagged_translation >= 1);
  CHECK(!outcome.validation_passed);
}

TEST_CASE("ablation sweep writes sorted rows and stable aggregates") {
  AblationOptions opts;
  opts.base = load_run_config(dataset().paths.config);
  opts.base.output.clear();
  opts.sweep = "pose_count";
  opts.values = {40, 80};
  opts.seeds = {1, 2};
  opts.out_csv = (dataset().dir / "ablation.csv").string();
  opts.threads = 1;
  const auto rows = run_ablation(opts);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].sweep_value == 40);
  CHECK(rows[0].seed == 1);
  CHECK(rows[3].sweep_value == 80);
  CHECK(rows[3].seed == 2);
  for (const auto& row : rows) {
    CHECK(row.e_t_cm >= 0.0);
    CHECK(std::isfinite(row.e_r_deg));
  }

  const std::string csv = slurp(opts.out_csv);
  CHECK(csv.rfind("sweep_value,seed,e_t_cm,e_r_deg,wall_time_s\n", 0) == 0);
  const std::string agg = slurp((dataset().dir / "ablation_agg.csv").string());
  CHECK(agg.find("sweep_value,n,") == 0);
  CHECK(std::count(agg.begin(), agg.end(), '\n') == 3);  // header + 2 values

  // metric columns are identical when cells run on worker threads
  AblationOptions threaded = opts;
  threaded.out_csv = (dataset().dir / "ablation_mt.csv").string();
  threaded.threads = 4;
  const auto rows_mt = run_ablation(threaded);
  REQUIRE(rows_mt.size() == rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows_mt[i].sweep_value == rows[i].sweep_value);
    CHECK(rows_mt[i].seed == rows[i].seed);
    CHECK(rows_mt[i].e_t_cm == rows[i].e_t_cm);
    CHECK(rows_mt[i].e_r_deg == rows[i].e_r_deg);
  }

  AblationOptions bad = opts;
  bad.sweep = "nonsense";
  CHECK_THROWS_AS(run_ablation(bad), ConfigError);
}

TEST_CASE("pairs_vs_fraction keeps the correspondence budget constant") {
  AblationOptions opts;
  opts.base = load_run_config(dataset().paths.config);
  opts.base.output.clear();
  opts.base.max_pairs_used = 20;
  opts.base.corr_fraction = 0.10;
  opts.sweep = "pairs_vs_fraction";
  opts.values = {10, 20};
  opts.seeds = {3};
  opts.out_csv.clear();
  const auto rows = run_ablation(opts);
  REQUIRE(rows.size() == 2);
  // halving the pair count doubles the per-frame fraction; both cells solve
  CHECK(rows[0].e_t_cm < 10.0);
  CHECK(rows[1].e_t_cm < 10.0);
}

TEST_CASE("CLI maps error families onto distinct exit codes") {
  const std::string cfg = dataset().paths.config;

  // 0: success
  CHECK(run_cli("calibrate --config " + cfg + " --output " +
                (dataset().dir / "cli_ok.json").string()) == 0);

  // 2: configuration errors (unknown key, bad subcommand usage)
  CHECK(run_cli("calibrate --config " + cfg + " --no_such_key 1") == 2);
  CHECK(run_cli("calibrate --config " + cfg + " --stage sideways") == 2);
  CHECK(run_cli("definitely-not-a-subcommand") == 2);

  // 3: io/parse errors (missing config, missing input file)
  CHECK(run_cli("calibrate --config /nonexistent/run.cfg") == 3);
  CHECK(run_cli("calibrate --config " + cfg + " --cam_trajectory /nonexistent/cam.txt") == 3);

  // 4: degeneracy (too few motion pairs survive)
  CHECK(run_cli("calibrate --config " + cfg + " --max_poses 3 --output " +
                (dataset().dir / "cli_few.json").string()) == 4);

  // 6: validation failure under --strict on weakly observed motion
  const fs::path planar_dir = fs::temp_directory_path() / "clcalib_cli_planar";
  fs::remove_all(planar_dir);
  ScenarioSpec spec;
  spec.t_gt = default_rig();
  spec.profile = MotionProfile::planar_loop;
  spec.duration = 12.0;
  spec.rng_seed = 777;
  spec.world_point_count = 1000;
  const Scenario scenario = generate_scenario(spec);
  const auto sets = synth_correspondences(scenario, default_intrinsics(), NoiseSpec{}, 40, 10);
  const DatasetPaths planar = write_dataset(scenario, default_intrinsics(), sets,
                                            planar_dir.string());
  CHECK(run_cli("calibrate --config " + planar.config + " --stage coarse --strict true" +
                " --output " + (planar_dir / "r.json").string()) == 6);
}
