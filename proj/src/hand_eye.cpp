#include "clcalib/hand_eye.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <numeric>

#include "clcalib/synth.hpp"

namespace clcalib {

namespace {

// Left- and right-multiplication matrices on [w,x,y,z] vectors:
// a*b = qmat_left(a)*b = qmat_right(b)*a.
Eigen::Matrix4d qmat_left(const Quat& q) {
  const double w = q.w(), x = q.x(), y = q.y(), z = q.z();
  Eigen::Matrix4d m;
  m << w, -x, -y, -z,
       x,  w, -z,  y,
       y,  z,  w, -x,
       z, -y,  x,  w;
  return m;
}

Eigen::Matrix4d qmat_right(const Quat& q) {
  const double w = q.w(), x = q.x(), y = q.y(), z = q.z();
  Eigen::Matrix4d m;
  m << w, -x, -y, -z,
       x,  w,  z, -y,
       y, -z,  w,  x,
       z,  y, -x,  w;
  return m;
}

double median(std::vector<double> values) {
  if (values.empty()) return 1.0;
  const size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  return values[mid];
}

Eigen::VectorXd seed_log_scales(const std::vector<MotionPair>& pairs, bool shared) {
  if (shared) {
    std::vector<double> inits;
    inits.reserve(pairs.size());
    for (const auto& p : pairs) inits.push_back(p.scale_init);
    Eigen::VectorXd s(1);
    s[0] = std::log(median(std::move(inits)));
    return s;
  }
  Eigen::VectorXd s(pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) s[i] = std::log(pairs[i].scale_init);
  return s;
}

}  // namespace

Quat init_rotation_closed_form(const std::vector<MotionPair>& pairs) {
  if (pairs.size() < 3)
    throw DegenerateRotationsError("closed-form rotation needs at least 3 motion pairs");

  // Axis-diversity gate on the angle-weighted rotation vectors: a rank-1
  // stack means every pair rotates about one axis and the hand-eye rotation
  // is determined only up to a rotation about it.
  Eigen::MatrixXd axes(pairs.size(), 3);
  for (size_t i = 0; i < pairs.size(); ++i)
    axes.row(i) = quat_log(pairs[i].t_lidar.rot).transpose();
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(axes);
  if (svd.singularValues()[1] <= 1e-6)
    throw DegenerateRotationsError("motion rotations span fewer than 2 axes");

  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  for (const auto& pair : pairs) {
    const Eigen::Matrix4d c = qmat_left(pair.t_cam.rot) - qmat_right(pair.t_lidar.rot);
    m += c.transpose() * c;
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(m);
  const Eigen::Vector4d v = es.eigenvectors().col(0);  // smallest eigenvalue
  return make_quat(v[0], v[1], v[2], v[3]);
}

Vec3 init_translation_linear(const std::vector<MotionPair>& pairs, const Quat& rotation,
                             const std::vector<double>& scales) {
  Mat3 m = Mat3::Zero();
  Vec3 b = Vec3::Zero();
  for (size_t i = 0; i < pairs.size(); ++i) {
    const Mat3 a = pairs[i].t_cam.rot.toRotationMatrix() - Mat3::Identity();
    const Vec3 rhs = rotation * pairs[i].t_lidar.trans - scales[i] * pairs[i].t_cam.trans;
    m += a.transpose() * a;
    b += a.transpose() * rhs;
  }
  // Minimum-norm solve; planar motion leaves a null direction.
  const Eigen::SelfAdjointEigenSolver<Mat3> es(m);
  const double cutoff = 1e-10 * std::max(es.eigenvalues()[2], 1e-300);
  Vec3 t = Vec3::Zero();
  for (int i = 0; i < 3; ++i) {
    if (es.eigenvalues()[i] <= cutoff) continue;
    t += es.eigenvectors().col(i) * (es.eigenvectors().col(i).dot(b) / es.eigenvalues()[i]);
  }
  return t;
}

CalibEstimate coarse_calibrate(const std::vector<MotionPair>& pairs, const CoarseOptions& opts) {
  const int min_pairs = std::max(opts.min_pairs, 3);
  if (static_cast<int>(pairs.size()) < min_pairs)
    throw TooFewPairsError("coarse stage needs at least " + std::to_string(min_pairs) +
                           " motion pairs, got " + std::to_string(pairs.size()));

  CalibEstimate estimate;
  Quat rot0 = Quat::Identity();
  if (opts.use_closed_form_rot_init) {
    try {
      rot0 = init_rotation_closed_form(pairs);
    } catch (const DegenerateRotationsError& e) {
      estimate.warnings.push_back(std::string("rotation init degenerate, seeding identity: ") +
                                  e.what());
    }
  }

  StateVector state0;
  state0.calib_rot = rot0;
  state0.log_scales = seed_log_scales(pairs, opts.residuals.shared_scale);
  std::vector<double> scale_seeds;
  scale_seeds.reserve(pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i)
    scale_seeds.push_back(opts.residuals.shared_scale ? std::exp(state0.log_scales[0])
                                                      : pairs[i].scale_init);
  state0.calib_trans = init_translation_linear(pairs, rot0, scale_seeds);

  BlockList blocks;
  append_motion_blocks(pairs, opts.residuals, blocks);
  auto [state, report] = solve_lm(state0, blocks, opts.solver);

  estimate.rotation = state.calib_rot;
  estimate.translation = state.calib_trans;
  estimate.scales = state.scales();
  estimate.report = std::move(report);
  return estimate;
}

std::vector<const CorrespondenceSet*> select_frames_uniform(
    const std::vector<CorrespondenceSet>& sets, int max_frames) {
  std::vector<const CorrespondenceSet*> ordered;
  ordered.reserve(sets.size());
  for (const auto& s : sets) ordered.push_back(&s);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto* a, const auto* b) { return a->frame_id < b->frame_id; });

  const int n = static_cast<int>(ordered.size());
  const int m = std::min(max_frames, n);
  if (m <= 0) return {};
  if (m == n) return ordered;
  std::vector<const CorrespondenceSet*> selected;
  selected.reserve(m);
  for (int j = 0; j < m; ++j) {
    const int idx = (m == 1) ? 0
                             : static_cast<int>(std::llround(static_cast<double>(j) *
                                                             (n - 1) / (m - 1)));
    selected.push_back(ordered[idx]);
  }
  return selected;
}

CalibEstimate fine_calibrate(const std::vector<MotionPair>& pairs,
                             const std::vector<CorrespondenceSet>& corr_sets,
                             const CameraIntrinsics& k, const Pose& t_init,
                             const FineOptions& opts) {
  if (opts.correspondence_fraction <= 0.0 || opts.correspondence_fraction > 1.0)
    throw ConfigError("correspondence_fraction must be in (0, 1]");
  size_t total_items = 0;
  for (const auto& s : corr_sets) total_items += s.items.size();
  if (corr_sets.empty() || total_items == 0)
    throw NoCorrespondencesError("fine stage needs at least one correspondence");

  BlockList blocks;
  const auto selected = select_frames_uniform(corr_sets, opts.max_pairs_used);
  for (const CorrespondenceSet* set : selected) {
    const CorrespondenceSet sub = subsample(
        *set, opts.correspondence_fraction,
        Rng::derive(opts.rng_seed, static_cast<std::uint64_t>(set->frame_id)));
    append_corr_blocks(sub, k, opts.residuals, blocks);
  }

  StateVector state0;
  state0.calib_rot = canonicalize(t_init.rot);
  state0.calib_trans = t_init.trans;
  if (opts.include_motion_constraints && !pairs.empty()) {
    state0.log_scales = seed_log_scales(pairs, opts.residuals.shared_scale);
    append_motion_blocks(pairs, opts.residuals, blocks);
  }

  auto [state, report] = solve_lm(state0, blocks, opts.solver);

  CalibEstimate estimate;
  estimate.rotation = state.calib_rot;
  estimate.translation = state.calib_trans;
  estimate.scales = state.scales();
  estimate.report = std::move(report);
  return estimate;
}

}  // namespace clcalib
