// Compares the OpenMP normal-equation assembly against the serial reference
// on problem sizes ranging from a short capture to a dense correspondence set.

#include <benchmark/benchmark.h>

#include "clcalib/residuals.hpp"
#include "clcalib/rng.hpp"
#include "clcalib/solver.hpp"

namespace {

using namespace clcalib;

struct Problem {
  StateVector state;
  BlockList blocks;
};

Problem make_problem(int pairs, int corr) {
  Rng rng(42);
  Problem problem;
  problem.state.calib_rot = make_quat(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  problem.state.calib_trans = Vec3(0.1, -0.2, 0.3);
  problem.state.log_scales = Eigen::VectorXd::Zero(pairs);

  ResidualOptions opts;
  std::vector<MotionPair> motion(pairs);
  for (int i = 0; i < pairs; ++i) {
    motion[i].index = i;
    motion[i].t_cam = Pose(0.0, quat_exp(Vec3(rng.normal(), rng.normal(), rng.normal()) * 0.02),
                           Vec3(rng.normal(), rng.normal(), rng.normal()) * 0.2);
    motion[i].t_lidar = Pose(0.0, quat_exp(Vec3(rng.normal(), rng.normal(), rng.normal()) * 0.02),
                             Vec3(rng.normal(), rng.normal(), rng.normal()) * 0.2);
    motion[i].scale_init = 1.0;
  }
  append_motion_blocks(motion, opts, problem.blocks);

  const CameraIntrinsics k{500.0, 500.0, 320.0, 240.0, 640, 480};
  CorrespondenceSet set;
  set.frame_id = 0;
  for (int i = 0; i < corr; ++i) {
    CorrespondenceItem item;
    const Vec3 pc(rng.uniform(-3.0, 3.0), rng.uniform(-2.0, 2.0), rng.uniform(4.0, 60.0));
    item.p_lidar = inverse(problem.state.calib_pose()).apply(pc);
    item.p_cmr = Vec2(rng.uniform(0.0, 639.0), rng.uniform(0.0, 479.0));
    set.items.push_back(item);
  }
  append_corr_blocks(set, k, opts, problem.blocks);
  return problem;
}

void bm_assemble_serial(benchmark::State& state) {
  const Problem problem = make_problem(static_cast<int>(state.range(0)),
                                       static_cast<int>(state.range(1)));
  for (auto _ : state) {
    auto sys = assemble_normal_equations_serial(problem.state, problem.blocks);
    benchmark::DoNotOptimize(sys.h_pose.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(problem.blocks.size()));
}

void bm_assemble_parallel(benchmark::State& state) {
  const Problem problem = make_problem(static_cast<int>(state.range(0)),
                                       static_cast<int>(state.range(1)));
  for (auto _ : state) {
    auto sys = assemble_normal_equations(problem.state, problem.blocks, true);
    benchmark::DoNotOptimize(sys.h_pose.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(problem.blocks.size()));
}

void bm_cost_serial(benchmark::State& state) {
  const Problem problem = make_problem(static_cast<int>(state.range(0)),
                                       static_cast<int>(state.range(1)));
  for (auto _ : state) {
    auto cost = total_cost_serial(problem.state, problem.blocks);
    benchmark::DoNotOptimize(cost.total());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(problem.blocks.size()));
}

void bm_cost_parallel(benchmark::State& state) {
  const Problem problem = make_problem(static_cast<int>(state.range(0)),
                                       static_cast<int>(state.range(1)));
  for (auto _ : state) {
    auto cost = total_cost(problem.state, problem.blocks, nullptr, true);
    benchmark::DoNotOptimize(cost.total());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(problem.blocks.size()));
}

}  // namespace

// {motion pairs, correspondences}
BENCHMARK(bm_assemble_serial)->Args({600, 1000})->Args({1000, 20000})->Args({1000, 200000});
BENCHMARK(bm_assemble_parallel)->Args({600, 1000})->Args({1000, 20000})->Args({1000, 200000});
BENCHMARK(bm_cost_serial)->Args({600, 1000})->Args({1000, 20000})->Args({1000, 200000});
BENCHMARK(bm_cost_parallel)->Args({600, 1000})->Args({1000, 20000})->Args({1000, 200000});

BENCHMARK_MAIN();
