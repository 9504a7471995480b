#pragma once

#include "clcalib/problem.hpp"

namespace clcalib {

/// Normal equations of the robust Gauss-Newton approximation, with the scale
/// variables kept in arrowhead form: each scale couples only to the
/// calibration block, so the damped solve reduces to 6x6 via a Schur
/// complement.
struct AssembledSystem {
  Eigen::Matrix<double, 6, 6> h_pose = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 1> g_pose = Eigen::Matrix<double, 6, 1>::Zero();
  Eigen::VectorXd d_scale;    // k  (diagonal of the scale-scale block)
  Eigen::VectorXd g_scale;    // k
  Eigen::MatrixXd coupling;   // 6 x k
  CostBreakdown cost;
  int skipped = 0;
  int evaluated = 0;
};

/// OpenMP-parallel assembly. Per-block contributions are computed
/// concurrently and reduced in block order, so the result is bit-identical
/// for any thread count. Set parallel=false for the single-pass path.
AssembledSystem assemble_normal_equations(const StateVector& state, const BlockList& blocks,
                                          bool parallel = true);

/// Plain single-loop reference; assemble_normal_equations must match it
/// bit-for-bit.
AssembledSystem assemble_normal_equations_serial(const StateVector& state,
                                                 const BlockList& blocks);

/// Robust total cost with per-kind breakdown. Blocks that cannot be
/// evaluated contribute zero and are counted in *skipped.
CostBreakdown total_cost(const StateVector& state, const BlockList& blocks,
                         int* skipped = nullptr, bool parallel = true);
CostBreakdown total_cost_serial(const StateVector& state, const BlockList& blocks,
                                int* skipped = nullptr);

/// Levenberg-Marquardt over the manifold state with IRLS robust weighting.
/// Accepted steps never increase the robust cost; identical inputs give
/// identical output for any thread count.
std::pair<StateVector, SolveReport> solve_lm(const StateVector& state0, const BlockList& blocks,
                                             const SolveOptions& opts = {});

/// Central finite differences on the manifold tangent,
/// dim x (6 + k) where k = state.num_scales(). Test and --check-gradients use only.
Eigen::MatrixXd numeric_jacobian(const ResidualBlock& block, const StateVector& state,
                                 double h = 1e-6);

/// Eigendecomposition of the 6x6 Gauss-Newton Hessian sub-block for
/// (rotation, translation); directions below ratio_threshold * max eigenvalue
/// are flagged with a readable axis description.
ObservabilityReport observability_report(const BlockList& blocks, const StateVector& state,
                                         double ratio_threshold = 1e-6, bool parallel = true);

}  // namespace clcalib
