#pragma once

#include <memory>
#include <string>
#include <vector>

#include "clcalib/dataio.hpp"
#include "clcalib/geometry.hpp"
#include "clcalib/robust_loss.hpp"

namespace clcalib {

/// Optimization state: the calibration transform plus one log-parameterized
/// scale per motion pair. Local tangent layout is
/// [rotation (3), translation (3), log-scales (k)].
struct StateVector {
  Quat calib_rot = Quat::Identity();
  Vec3 calib_trans = Vec3::Zero();
  Eigen::VectorXd log_scales;

  int num_scales() const { return static_cast<int>(log_scales.size()); }
  int local_dim() const { return 6 + num_scales(); }
  double scale(int i) const { return std::exp(log_scales[i]); }

  std::vector<double> scales() const {
    std::vector<double> out(log_scales.size());
    for (int i = 0; i < log_scales.size(); ++i) out[i] = std::exp(log_scales[i]);
    return out;
  }

  Pose calib_pose() const { return Pose(0.0, calib_rot, calib_trans); }

  /// Manifold update: rot <- rot * exp(delta[0:3]), trans += delta[3:6],
  /// log_scales += delta[6:]. Scales stay positive by construction.
  StateVector boxplus(const Eigen::VectorXd& delta) const {
    StateVector out = *this;
    Quat q = calib_rot * quat_exp(delta.segment<3>(0));
    q.normalize();
    out.calib_rot = canonicalize(q);
    out.calib_trans += delta.segment<3>(3);
    if (num_scales() > 0) out.log_scales += delta.tail(num_scales());
    return out;
  }
};

enum class ResidualKind { rot, trans, corr };

/// One weighted constraint. Subclasses provide the residual and its analytic
/// Jacobians with respect to the calibration tangent and (optionally) one
/// scale variable.
class ResidualBlock {
 public:
  ResidualBlock(ResidualKind kind, int dim, Eigen::VectorXd info_diag, Robustifier robustifier,
                int scale_index = -1)
      : kind_(kind),
        dim_(dim),
        info_diag_(std::move(info_diag)),
        robustifier_(robustifier),
        scale_index_(scale_index) {}
  virtual ~ResidualBlock() = default;

  ResidualKind kind() const { return kind_; }
  int dim() const { return dim_; }
  int scale_index() const { return scale_index_; }
  const Eigen::VectorXd& info_diag() const { return info_diag_; }
  const Robustifier& robustifier() const { return robustifier_; }
  void set_robustifier(Robustifier r) { robustifier_ = r; }

  /// Returns false when the block is not evaluable at this state (point
  /// behind camera); the caller skips it and counts.
  virtual bool evaluate(const StateVector& x, Eigen::VectorXd& residual,
                        Eigen::Matrix<double, Eigen::Dynamic, 6>* j_pose,
                        Eigen::VectorXd* j_scale) const = 0;

 private:
  ResidualKind kind_;
  int dim_;
  Eigen::VectorXd info_diag_;
  Robustifier robustifier_;
  int scale_index_;
};

using BlockList = std::vector<std::unique_ptr<ResidualBlock>>;

/// State plus the typed residual blocks constraining it.
struct CalibProblem {
  StateVector state;
  BlockList blocks;
};

struct CostBreakdown {
  double rot = 0.0;
  double trans = 0.0;
  double corr = 0.0;

  double total() const { return rot + trans + corr; }
};

struct ObservabilityReport {
  std::vector<ObservabilityEntry> spectrum;  // 6 entries, eigenvalues ascending
  std::vector<std::string> warnings;
  int flagged_rotation = 0;
  int flagged_translation = 0;

  int flagged() const { return flagged_rotation + flagged_translation; }
};

struct SolveReport {
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  CostBreakdown breakdown;  // at the final state
  std::string termination;
  int skipped_corr = 0;  // blocks not evaluable at the final state
  int corr_blocks = 0;
  ObservabilityReport observability;
};

struct SolveOptions {
  int max_iterations = 100;
  double gradient_tolerance = 1e-10;
  double cost_change_tolerance = 1e-12;  // relative
  double initial_damping = 1e-4;
  double max_damping = 1e8;
  double observability_ratio_threshold = 1e-6;
  bool parallel = true;
};

}  // namespace clcalib
