#include "clcalib/residuals.hpp"

#include "clcalib/rng.hpp"
#include "clcalib/solver.hpp"

namespace clcalib {

namespace {

Robustifier make_robustifier(bool use_cauchy, double c_raw, double sigma) {
  return use_cauchy ? Robustifier::make_cauchy(c_raw / sigma) : Robustifier::none();
}

Eigen::VectorXd uniform_info(int dim, double sigma) {
  return Eigen::VectorXd::Constant(dim, 1.0 / (sigma * sigma));
}

}  // namespace

RotationMotionBlock::RotationMotionBlock(const MotionPair& pair, const ResidualOptions& opts)
    : ResidualBlock(ResidualKind::rot, 9, uniform_info(9, opts.sigma_rot),
                    make_robustifier(opts.use_cauchy, opts.cauchy_rot, opts.sigma_rot)),
      r_cam_(pair.t_cam.rot.toRotationMatrix()),
      r_lidar_(pair.t_lidar.rot.toRotationMatrix()) {}

bool RotationMotionBlock::evaluate(const StateVector& x, Eigen::VectorXd& residual,
                                   Eigen::Matrix<double, Eigen::Dynamic, 6>* j_pose,
                                   Eigen::VectorXd*) const {
  const Mat3 r_calib = x.calib_rot.toRotationMatrix();
  const Mat3 g = r_calib.transpose() * r_cam_ * r_calib;  // R_x^T R_cam R_x
  residual = vec_flatten3(r_lidar_.transpose() * g - Mat3::Identity());
  if (j_pose) {
    j_pose->resize(9, 6);
    j_pose->setZero();
    for (int k = 0; k < 3; ++k) {
      const Mat3 ek = skew(Vec3::Unit(k));
      j_pose->col(k) = vec_flatten3(r_lidar_.transpose() * (g * ek - ek * g));
    }
  }
  return true;
}

TranslationMotionBlock::TranslationMotionBlock(const MotionPair& pair, int scale_index,
                                               const ResidualOptions& opts, double fixed_scale)
    : ResidualBlock(ResidualKind::trans, 3, uniform_info(3, opts.sigma_trans),
                    make_robustifier(opts.use_cauchy, opts.cauchy_trans, opts.sigma_trans),
                    scale_index),
      r_cam_(pair.t_cam.rot.toRotationMatrix()),
      t_cam_(pair.t_cam.trans),
      t_lidar_(pair.t_lidar.trans),
      fixed_scale_(fixed_scale) {}

bool TranslationMotionBlock::evaluate(const StateVector& x, Eigen::VectorXd& residual,
                                      Eigen::Matrix<double, Eigen::Dynamic, 6>* j_pose,
                                      Eigen::VectorXd* j_scale) const {
  const double s = scale_index() >= 0 ? x.scale(scale_index()) : fixed_scale_;
  const Mat3 r_cam_minus_i = r_cam_ - Mat3::Identity();
  residual = r_cam_minus_i * x.calib_trans + s * t_cam_ - x.calib_rot * t_lidar_;
  if (j_pose) {
    j_pose->resize(3, 6);
    j_pose->block<3, 3>(0, 0) = x.calib_rot.toRotationMatrix() * skew(t_lidar_);
    j_pose->block<3, 3>(0, 3) = r_cam_minus_i;
  }
  if (j_scale && scale_index() >= 0) *j_scale = s * t_cam_;  // d/d(log s)
  return true;
}

ReprojectionBlock::ReprojectionBlock(const CorrespondenceItem& item, const CameraIntrinsics& k,
                                     const ResidualOptions& opts)
    : ResidualBlock(ResidualKind::corr, 2, uniform_info(2, opts.sigma_px),
                    make_robustifier(opts.use_cauchy, opts.cauchy_corr, opts.sigma_px)),
      point_(item.p_lidar),
      pixel_(item.p_cmr),
      k_(k),
      depth_epsilon_(opts.depth_epsilon) {}

bool ReprojectionBlock::evaluate(const StateVector& x, Eigen::VectorXd& residual,
                                 Eigen::Matrix<double, Eigen::Dynamic, 6>* j_pose,
                                 Eigen::VectorXd*) const {
  const Vec3 pc = x.calib_rot * point_ + x.calib_trans;
  if (pc.z() <= depth_epsilon_) return false;
  const double inv_z = 1.0 / pc.z();
  residual.resize(2);
  residual << k_.fx * pc.x() * inv_z + k_.cx - pixel_.x(),
      k_.fy * pc.y() * inv_z + k_.cy - pixel_.y();
  if (j_pose) {
    Eigen::Matrix<double, 2, 3> d_pixel;
    d_pixel << k_.fx * inv_z, 0.0, -k_.fx * pc.x() * inv_z * inv_z,
        0.0, k_.fy * inv_z, -k_.fy * pc.y() * inv_z * inv_z;
    j_pose->resize(2, 6);
    j_pose->block<2, 3>(0, 0) = d_pixel * (-(x.calib_rot.toRotationMatrix() * skew(point_)));
    j_pose->block<2, 3>(0, 3) = d_pixel;
  }
  return true;
}

Eigen::Matrix<double, 9, 1> residual_rot(const MotionPair& pair, const StateVector& state) {
  const Mat3 r_calib = state.calib_rot.toRotationMatrix();
  const Mat3 m = (r_calib * pair.t_lidar.rot.toRotationMatrix()).transpose() *
                 (pair.t_cam.rot.toRotationMatrix() * r_calib);
  return vec_flatten3(m - Mat3::Identity());
}

Vec3 residual_trans(const MotionPair& pair, const StateVector& state, double s) {
  return (pair.t_cam.rot.toRotationMatrix() - Mat3::Identity()) * state.calib_trans +
         s * pair.t_cam.trans - state.calib_rot * pair.t_lidar.trans;
}

Vec2 residual_corr(const CorrespondenceItem& item, const CameraIntrinsics& k,
                   const StateVector& state) {
  return project(item.p_lidar, k, state.calib_pose()) - item.p_cmr;
}

void append_motion_blocks(const std::vector<MotionPair>& pairs, const ResidualOptions& opts,
                          BlockList& blocks) {
  for (size_t i = 0; i < pairs.size(); ++i) {
    const int scale_index = opts.shared_scale ? 0 : static_cast<int>(i);
    blocks.push_back(std::make_unique<RotationMotionBlock>(pairs[i], opts));
    blocks.push_back(std::make_unique<TranslationMotionBlock>(pairs[i], scale_index, opts));
  }
}

void append_corr_blocks(const CorrespondenceSet& set, const CameraIntrinsics& k,
                        const ResidualOptions& opts, BlockList& blocks) {
  for (const auto& item : set.items)
    blocks.push_back(std::make_unique<ReprojectionBlock>(item, k, opts));
}

namespace {

Quat random_quat(Rng& rng) {
  return make_quat(rng.normal(), rng.normal(), rng.normal(), rng.normal());
}

Pose random_motion(Rng& rng, double rot_scale, double trans_scale) {
  const Vec3 rv(rng.uniform(-rot_scale, rot_scale), rng.uniform(-rot_scale, rot_scale),
                rng.uniform(-rot_scale, rot_scale));
  const Vec3 tv(rng.uniform(-trans_scale, trans_scale), rng.uniform(-trans_scale, trans_scale),
                rng.uniform(-trans_scale, trans_scale));
  return Pose(0.0, quat_exp(rv), tv);
}

double relative_jacobian_error(const ResidualBlock& block, const StateVector& state) {
  Eigen::VectorXd r;
  Eigen::Matrix<double, Eigen::Dynamic, 6> j_pose;
  Eigen::VectorXd j_scale;
  const bool has_scale = block.scale_index() >= 0;
  if (!block.evaluate(state, r, &j_pose, has_scale ? &j_scale : nullptr))
    throw EvalError("block not evaluable at the sampled state");

  Eigen::MatrixXd analytic(block.dim(), state.local_dim());
  analytic.setZero();
  analytic.leftCols<6>() = j_pose;
  if (has_scale) analytic.col(6 + block.scale_index()) = j_scale;

  const Eigen::MatrixXd numeric = numeric_jacobian(block, state);
  const double denom = std::max(1.0, numeric.cwiseAbs().maxCoeff());
  return (analytic - numeric).cwiseAbs().maxCoeff() / denom;
}

}  // namespace

GradientCheckReport check_gradients(std::uint64_t seed, int samples, double tolerance) {
  GradientCheckReport report;
  report.samples = samples;
  report.tolerance = tolerance;

  Rng rng(seed);
  ResidualOptions opts;
  const CameraIntrinsics k{500.0, 500.0, 320.0, 240.0, 640, 480};

  for (int i = 0; i < samples; ++i) {
    StateVector state;
    state.calib_rot = random_quat(rng);
    state.calib_trans =
        Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
    state.log_scales = Eigen::VectorXd::Constant(1, rng.uniform(-0.5, 0.5));

    MotionPair pair;
    pair.t_cam = random_motion(rng, 0.4, 0.5);
    pair.t_lidar = random_motion(rng, 0.4, 0.5);

    const RotationMotionBlock rot_block(pair, opts);
    report.max_rel_rot = std::max(report.max_rel_rot, relative_jacobian_error(rot_block, state));

    const TranslationMotionBlock trans_block(pair, 0, opts);
    report.max_rel_trans =
        std::max(report.max_rel_trans, relative_jacobian_error(trans_block, state));

    // A point guaranteed well in front of the camera at this state: pull a
    // camera-frame point back through the current calibration.
    const Vec3 pc(rng.uniform(-2.0, 2.0), rng.uniform(-1.5, 1.5), rng.uniform(4.0, 30.0));
    CorrespondenceItem item;
    item.p_lidar = inverse(state.calib_pose()).apply(pc);
    item.p_cmr = Vec2(rng.uniform(0.0, 639.0), rng.uniform(0.0, 479.0));
    const ReprojectionBlock corr_block(item, k, opts);
    report.max_rel_corr =
        std::max(report.max_rel_corr, relative_jacobian_error(corr_block, state));
  }
  return report;
}

}  // namespace clcalib
