#include "clcalib/solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cassert>
#include <cmath>
#include <optional>

namespace clcalib {

namespace {

using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

// Chunk size for the parallel evaluate-then-reduce passes. Contributions are
// reduced in block order, never in thread arrival order. Problems below the
// cutoff cannot amortize the team and barrier overhead and take the serial
// path; both paths produce the same bits.
constexpr int kChunk = 4096;
constexpr int kParallelCutoff = 16384;
constexpr double kDiagFloor = 1e-12;

struct BlockContribution {
  Mat6 a = Mat6::Zero();
  Vec6 gp = Vec6::Zero();
  Vec6 b = Vec6::Zero();
  double d = 0.0;
  double gs = 0.0;
  double cost = 0.0;
  int scale_index = -1;
  ResidualKind kind = ResidualKind::rot;
  bool ok = false;
};

struct EvalScratch {
  Eigen::VectorXd r;
  Eigen::Matrix<double, Eigen::Dynamic, 6> jp;
  Eigen::VectorXd js;
};

void eval_contribution(const ResidualBlock& block, const StateVector& state,
                       EvalScratch& scratch, BlockContribution& out) {
  out.kind = block.kind();
  out.scale_index = block.scale_index();
  const bool has_scale = out.scale_index >= 0;
  if (!block.evaluate(state, scratch.r, &scratch.jp, has_scale ? &scratch.js : nullptr)) {
    out.ok = false;
    return;
  }
  out.ok = true;
  const Eigen::VectorXd& omega = block.info_diag();
  const Eigen::VectorXd weighted_r = omega.cwiseProduct(scratch.r);
  const double s = scratch.r.dot(weighted_r);
  const RobustEval rob = block.robustifier()(s);
  out.cost = rob.rho;
  const Eigen::Matrix<double, Eigen::Dynamic, 6> wj = omega.asDiagonal() * scratch.jp;
  out.a = rob.weight * (scratch.jp.transpose() * wj);
  out.gp = rob.weight * (scratch.jp.transpose() * weighted_r);
  if (has_scale) {
    const Eigen::VectorXd wjs = omega.cwiseProduct(scratch.js);
    out.b = rob.weight * (scratch.jp.transpose() * wjs);
    out.d = rob.weight * scratch.js.dot(wjs);
    out.gs = rob.weight * scratch.js.dot(weighted_r);
  }
}

void eval_cost_only(const ResidualBlock& block, const StateVector& state, Eigen::VectorXd& r,
                    BlockContribution& out) {
  out.kind = block.kind();
  if (!block.evaluate(state, r, nullptr, nullptr)) {
    out.ok = false;
    return;
  }
  out.ok = true;
  const double s = r.dot(block.info_diag().cwiseProduct(r));
  out.cost = block.robustifier()(s).rho;
}

void accumulate(AssembledSystem& sys, const BlockContribution& c) {
  if (!c.ok) {
    ++sys.skipped;
    return;
  }
  ++sys.evaluated;
  sys.h_pose += c.a;
  sys.g_pose += c.gp;
  switch (c.kind) {
    case ResidualKind::rot: sys.cost.rot += c.cost; break;
    case ResidualKind::trans: sys.cost.trans += c.cost; break;
    case ResidualKind::corr: sys.cost.corr += c.cost; break;
  }
  if (c.scale_index >= 0) {
    sys.coupling.col(c.scale_index) += c.b;
    sys.d_scale[c.scale_index] += c.d;
    sys.g_scale[c.scale_index] += c.gs;
  }
}

void accumulate_cost(CostBreakdown& cost, int& skipped, const BlockContribution& c) {
  if (!c.ok) {
    ++skipped;
    return;
  }
  switch (c.kind) {
    case ResidualKind::rot: cost.rot += c.cost; break;
    case ResidualKind::trans: cost.trans += c.cost; break;
    case ResidualKind::corr: cost.corr += c.cost; break;
  }
}

AssembledSystem make_system(const StateVector& state) {
  AssembledSystem sys;
  const int k = state.num_scales();
  sys.d_scale = Eigen::VectorXd::Zero(k);
  sys.g_scale = Eigen::VectorXd::Zero(k);
  sys.coupling = Eigen::MatrixXd::Zero(6, k);
  return sys;
}

double gradient_inf_norm(const AssembledSystem& sys) {
  double g = sys.g_pose.cwiseAbs().maxCoeff();
  if (sys.g_scale.size() > 0) g = std::max(g, sys.g_scale.cwiseAbs().maxCoeff());
  return g;
}

/// Damped arrowhead solve of [A B; B^T D] delta = -[gp; gs] via the 6x6 Schur
/// complement. Returns nullopt when the factorization fails.
std::optional<Eigen::VectorXd> solve_damped(const AssembledSystem& sys, double lambda) {
  const int k = static_cast<int>(sys.d_scale.size());
  Mat6 ad = sys.h_pose;
  for (int i = 0; i < 6; ++i) ad(i, i) += lambda * std::max(sys.h_pose(i, i), kDiagFloor);
  Vec6 rhs = -sys.g_pose;

  Eigen::VectorXd dd;
  if (k > 0) {
    dd = sys.d_scale + lambda * sys.d_scale.cwiseMax(kDiagFloor);
    const Eigen::VectorXd dinv = dd.cwiseInverse();
    ad -= sys.coupling * dinv.asDiagonal() * sys.coupling.transpose();
    rhs += sys.coupling * dinv.cwiseProduct(sys.g_scale);
  }

  Eigen::LLT<Mat6> llt(ad);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const Vec6 dp = llt.solve(rhs);
  if (!dp.allFinite()) return std::nullopt;

  Eigen::VectorXd delta(6 + k);
  delta.head<6>() = dp;
  for (int i = 0; i < k; ++i)
    delta[6 + i] = (-sys.g_scale[i] - sys.coupling.col(i).dot(dp)) / dd[i];
  return delta;
}

}  // namespace

AssembledSystem assemble_normal_equations_serial(const StateVector& state,
                                                 const BlockList& blocks) {
  AssembledSystem sys = make_system(state);
  EvalScratch scratch;
  BlockContribution c;
  for (const auto& block : blocks) {
    eval_contribution(*block, state, scratch, c);
    accumulate(sys, c);
  }
  return sys;
}

AssembledSystem assemble_normal_equations(const StateVector& state, const BlockList& blocks,
                                          bool parallel) {
  if (!parallel || blocks.size() < kParallelCutoff)
    return assemble_normal_equations_serial(state, blocks);

  AssembledSystem sys = make_system(state);
  const int n = static_cast<int>(blocks.size());
  std::vector<BlockContribution> slot(std::min(n, kChunk));
  // One team for the whole pass; each chunk is evaluated concurrently, then a
  // single thread folds it in block order so any thread count reproduces the
  // serial bit pattern.
#pragma omp parallel
  {
    EvalScratch scratch;
    for (int base = 0; base < n; base += kChunk) {
      const int count = std::min(kChunk, n - base);
#pragma omp for schedule(static)
      for (int i = 0; i < count; ++i)
        eval_contribution(*blocks[base + i], state, scratch, slot[i]);
#pragma omp single
      for (int i = 0; i < count; ++i) accumulate(sys, slot[i]);
    }
  }
  return sys;
}

CostBreakdown total_cost_serial(const StateVector& state, const BlockList& blocks,
                                int* skipped) {
  CostBreakdown cost;
  int skip = 0;
  Eigen::VectorXd r;
  BlockContribution c;
  for (const auto& block : blocks) {
    eval_cost_only(*block, state, r, c);
    accumulate_cost(cost, skip, c);
  }
  if (skipped) *skipped = skip;
  return cost;
}

CostBreakdown total_cost(const StateVector& state, const BlockList& blocks, int* skipped,
                         bool parallel) {
  if (!parallel || blocks.size() < kParallelCutoff)
    return total_cost_serial(state, blocks, skipped);

  CostBreakdown cost;
  int skip = 0;
  const int n = static_cast<int>(blocks.size());
  std::vector<BlockContribution> slot(std::min(n, kChunk));
#pragma omp parallel
  {
    Eigen::VectorXd r;
    for (int base = 0; base < n; base += kChunk) {
      const int count = std::min(kChunk, n - base);
#pragma omp for schedule(static)
      for (int i = 0; i < count; ++i)
        eval_cost_only(*blocks[base + i], state, r, slot[i]);
#pragma omp single
      for (int i = 0; i < count; ++i) accumulate_cost(cost, skip, slot[i]);
    }
  }
  if (skipped) *skipped = skip;
  return cost;
}

std::pair<StateVector, SolveReport> solve_lm(const StateVector& state0, const BlockList& blocks,
                                             const SolveOptions& opts) {
  if (blocks.empty()) throw ConfigError("solve_lm requires at least one residual block");

  SolveReport report;
  for (const auto& b : blocks)
    if (b->kind() == ResidualKind::corr) ++report.corr_blocks;

  StateVector state = state0;
  AssembledSystem sys = assemble_normal_equations(state, blocks, opts.parallel);
  double cost = sys.cost.total();
  report.initial_cost = cost;

  double lambda = opts.initial_damping;
  std::string termination;
  int iterations = 0;

  if (gradient_inf_norm(sys) <= opts.gradient_tolerance) termination = "converged_gradient";

  while (termination.empty() && iterations < opts.max_iterations) {
    bool accepted = false;
    while (true) {
      const auto delta = solve_damped(sys, lambda);
      if (!delta) {
        lambda *= 4.0;
        if (lambda > opts.max_damping)
          throw SingularSystemError(
              "damped normal equations cannot be factorized at maximum damping");
        continue;
      }
      StateVector candidate = state.boxplus(*delta);
      const double candidate_cost = total_cost(candidate, blocks, nullptr, opts.parallel).total();
      if (candidate_cost < cost) {
        const double previous = cost;
        state = std::move(candidate);
        cost = candidate_cost;
        assert(cost <= previous);
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        ++iterations;
        if (previous - cost <= opts.cost_change_tolerance * std::max(previous, 1.0))
          termination = "converged_cost_change";
        break;
      }
      lambda *= 4.0;
      if (lambda > opts.max_damping) {
        termination = "stalled";
        break;
      }
    }
    if (!accepted || !termination.empty()) break;
    sys = assemble_normal_equations(state, blocks, opts.parallel);
    if (gradient_inf_norm(sys) <= opts.gradient_tolerance) termination = "converged_gradient";
  }
  if (termination.empty()) termination = "max_iterations";

  report.termination = termination;
  report.iterations = iterations;
  report.breakdown = total_cost(state, blocks, &report.skipped_corr, opts.parallel);
  report.final_cost = report.breakdown.total();
  report.observability =
      observability_report(blocks, state, opts.observability_ratio_threshold, opts.parallel);
  return {std::move(state), std::move(report)};
}

Eigen::MatrixXd numeric_jacobian(const ResidualBlock& block, const StateVector& state, double h) {
  if (!(h > 0.0) || h > 1e-3) throw ConfigError("finite-difference step must be in (0, 1e-3]");
  const int n = state.local_dim();
  Eigen::MatrixXd j(block.dim(), n);
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd r_plus, r_minus;
  for (int col = 0; col < n; ++col) {
    delta[col] = h;
    const bool ok_plus = block.evaluate(state.boxplus(delta), r_plus, nullptr, nullptr);
    delta[col] = -h;
    const bool ok_minus = block.evaluate(state.boxplus(delta), r_minus, nullptr, nullptr);
    delta[col] = 0.0;
    if (!ok_plus || !ok_minus)
      throw EvalError("residual not evaluable at finite-difference probe state");
    j.col(col) = (r_plus - r_minus) / (2.0 * h);
  }
  return j;
}

ObservabilityReport observability_report(const BlockList& blocks, const StateVector& state,
                                         double ratio_threshold, bool parallel) {
  const AssembledSystem sys = assemble_normal_equations(state, blocks, parallel);
  Eigen::SelfAdjointEigenSolver<Mat6> es(sys.h_pose);

  ObservabilityReport report;
  const auto& values = es.eigenvalues();   // ascending
  const auto& vectors = es.eigenvectors();
  const double max_eig = values(5);
  static const char* kAxisNames[6] = {"rotation about x", "rotation about y",
                                      "rotation about z", "translation x",
                                      "translation y",    "translation z"};
  for (int i = 0; i < 6; ++i) {
    ObservabilityEntry entry;
    entry.direction = vectors.col(i);
    entry.eigenvalue = values(i);
    report.spectrum.push_back(entry);

    const bool flagged = max_eig <= 0.0 || values(i) < ratio_threshold * max_eig;
    if (!flagged) continue;
    int dominant = 0;
    entry.direction.cwiseAbs().maxCoeff(&dominant);
    if (dominant < 3)
      ++report.flagged_rotation;
    else
      ++report.flagged_translation;
    report.warnings.push_back(std::string("weakly constrained direction: ") +
                              kAxisNames[dominant] + " (eigenvalue " +
                              format_double(values(i)) + " vs max " + format_double(max_eig) +
                              ")");
  }
  return report;
}

}  // namespace clcalib
