#include "rcmhqp/hqp_controller.hpp"

#include <algorithm>
#include <cmath>

#include "rcmhqp/error.hpp"

namespace rcmhqp {

namespace {

LevelStatus level_status(QpStatus s) {
  switch (s) {
    case QpStatus::Solved: return LevelStatus::Solved;
    case QpStatus::MaxIterations: return LevelStatus::MaxIterations;
    case QpStatus::PrimalInfeasible: return LevelStatus::Infeasible;
  }
  return LevelStatus::Infeasible;
}

void check_dt(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("control period dt must be positive");
}

// Shared assembly: A_bar = [[task, 0], [0, I_2n]], b_bar = [target; 0].
LevelBlocks assemble(const Eigen::MatrixXd& task, const Eigen::VectorXd& target,
                     const Eigen::MatrixXd& projector, const JointVector& qdot_prev,
                     const JointVector& q, const JointLimits& limits, double dt) {
  check_dt(dt);
  const Eigen::Index n = q.size();
  if (limits.lower.size() != n || limits.upper.size() != n) {
    throw ConfigError("joint limits do not match the joint vector");
  }
  const Eigen::Index rows = task.rows();
  LevelBlocks b;
  b.A_bar = Eigen::MatrixXd::Zero(rows + 2 * n, 3 * n);
  b.A_bar.topLeftCorner(rows, n) = task;
  b.A_bar.bottomRightCorner(2 * n, 2 * n).setIdentity();
  b.b_bar = Eigen::VectorXd::Zero(rows + 2 * n);
  b.b_bar.head(rows) = target;

  b.Q = b.A_bar.transpose() * b.A_bar;
  b.p = -b.A_bar.transpose() * b.b_bar;

  b.C.resize(2 * n, n);
  b.C << Eigen::MatrixXd::Identity(n, n), -Eigen::MatrixXd::Identity(n, n);
  b.d.resize(2 * n);
  b.d << (limits.upper - q) / dt, -(limits.lower - q) / dt;

  b.G.resize(2 * n, 3 * n);
  b.G << b.C * projector, -Eigen::MatrixXd::Identity(2 * n, 2 * n);
  b.h = b.d - b.C * qdot_prev;
  return b;
}

}  // namespace

HqpGains HqpGains::defaults(double dt) {
  check_dt(dt);
  HqpGains g;
  g.k_rcm = std::min(0.8 / dt, 200.0);
  return g;
}

void HqpGains::validate() const {
  if (!(k_rcm > 0.0) || !(k_vis > 0.0)) throw ConfigError("controller gains must be positive");
  if (!(svd_tolerance > 0.0)) throw ConfigError("svd_tolerance must be positive");
}

JointLimits JointLimits::of(const KinematicChain& chain) {
  return {chain.lower_limits(), chain.upper_limits()};
}

std::string_view to_string(LevelStatus status) {
  switch (status) {
    case LevelStatus::Solved: return "solved";
    case LevelStatus::MaxIterations: return "max_iter";
    case LevelStatus::Infeasible: return "infeasible";
    case LevelStatus::Skipped: return "skipped";
  }
  return "unknown";
}

JointVector baseline_pinv_step(const Eigen::MatrixXd& jacobian, const Eigen::VectorXd& xdot_des,
                               double svd_tolerance) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(jacobian, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  JointVector qdot = JointVector::Zero(jacobian.cols());
  if (sigma.size() == 0 || sigma(0) <= 0.0) return qdot;
  const double cutoff = svd_tolerance * sigma(0);
  const Eigen::VectorXd projected = svd.matrixU().transpose() * xdot_des;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > cutoff) qdot += svd.matrixV().col(i) * (projected(i) / sigma(i));
  }
  return qdot;
}

LevelBlocks build_level1(const Eigen::RowVectorXd& j_rcm, double e_rcm, const HqpGains& gains,
                         const JointVector& q, const JointLimits& limits, double dt) {
  const Eigen::Index n = q.size();
  if (j_rcm.size() != n) throw ConfigError("J_rcm width does not match the joint vector");
  Eigen::VectorXd target(1);
  target << gains.k_rcm * e_rcm;
  return assemble(j_rcm, target, Eigen::MatrixXd::Identity(n, n), JointVector::Zero(n), q, limits, dt);
}

Eigen::MatrixXd null_space_projector(const Eigen::RowVectorXd& j_rcm, double svd_tolerance) {
  const Eigen::Index n = j_rcm.size();
  Eigen::MatrixXd n1 = Eigen::MatrixXd::Identity(n, n);
  const double sq = j_rcm.squaredNorm();
  // J_rcm is in m/rad; below the cutoff the row carries no usable direction.
  if (std::sqrt(sq) <= svd_tolerance) return n1;
  n1.noalias() -= j_rcm.transpose() * (j_rcm / sq);
  return n1;
}

LevelBlocks build_level2(const Eigen::Matrix<double, 2, Eigen::Dynamic>& j_vis,
                         const Eigen::Vector2d& e_vis, const HqpGains& gains,
                         const JointVector& qdot1, const Eigen::MatrixXd& n1, const JointVector& q,
                         const JointLimits& limits, double dt) {
  const Eigen::Index n = q.size();
  if (j_vis.cols() != n || qdot1.size() != n || n1.rows() != n || n1.cols() != n) {
    throw ConfigError("level-2 inputs do not match the joint vector");
  }
  const Eigen::Vector2d target = -gains.k_vis * e_vis - j_vis * qdot1;
  return assemble(j_vis * n1, target, n1, qdot1, q, limits, dt);
}

HqpController::HqpController(HqpGains gains, QpSettings settings)
    : gains_(gains), level1_solver_(settings), level2_solver_(settings) {
  gains_.validate();
}

void HqpController::reset_warm_start() {
  warm1_.reset();
  warm2_.reset();
}

HqpResult HqpController::solve(const Eigen::RowVectorXd& j_rcm, double e_rcm,
                               const Eigen::Matrix<double, 2, Eigen::Dynamic>& j_vis,
                               const Eigen::Vector2d& e_vis, const JointVector& q,
                               const JointLimits& limits, double dt) {
  const Eigen::Index n = q.size();
  HqpResult r;
  r.qdot1 = JointVector::Zero(n);
  r.qdot2 = JointVector::Zero(n);
  r.qdot_sol = JointVector::Zero(n);
  r.n1 = Eigen::MatrixXd::Identity(n, n);

  const LevelBlocks l1 = build_level1(j_rcm, e_rcm, gains_, q, limits, dt);
  const QpSolution s1 = level1_solver_.solve(l1.problem(), warm1_);
  r.level1_time = s1.solve_time;
  r.status1 = level_status(s1.status);
  if (!s1.solved()) {
    warm1_.reset();
    return r;
  }
  warm1_ = s1.x;
  r.qdot1 = s1.x.head(n);
  r.slack1_norm = s1.x.tail(2 * n).norm();
  r.qdot_sol = r.qdot1;
  r.n1 = null_space_projector(j_rcm, gains_.svd_tolerance);

  const LevelBlocks l2 = build_level2(j_vis, e_vis, gains_, r.qdot1, r.n1, q, limits, dt);
  const QpSolution s2 = level2_solver_.solve(l2.problem(), warm2_);
  r.level2_time = s2.solve_time;
  r.status2 = level_status(s2.status);
  if (!s2.solved()) {
    warm2_.reset();
    return r;
  }
  warm2_ = s2.x;
  r.qdot2 = s2.x.head(n);
  r.slack2_norm = s2.x.tail(2 * n).norm();
  r.qdot_sol = r.n1 * r.qdot2 + r.qdot1;
  return r;
}

HqpResult solve_step(const KinematicChain& chain, const JointVector& q, const TrocarConfig& trocar,
                     const Marker& marker, const CameraIntrinsics& intrinsics, const HqpGains& gains,
                     const JointLimits& limits, double dt, const QpSettings& qp_settings) {
  const RcmState rcm = compute_rcm_state(chain, q, trocar);
  const VisualTask vis = visual_jacobian(chain, q, intrinsics, marker);
  HqpController controller(gains, qp_settings);
  return controller.solve(rcm.j_rcm, rcm.e_rcm, vis.jacobian, vis.error, q, limits, dt);
}

}  // namespace rcmhqp
