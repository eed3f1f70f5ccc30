#pragma once

#include <Eigen/Dense>
#include <optional>

#include "rcmhqp/kinematics.hpp"
#include "rcmhqp/qp_solver.hpp"
#include "rcmhqp/rcm_task.hpp"
#include "rcmhqp/visual_task.hpp"

namespace rcmhqp {

struct HqpGains {
  double k_rcm = 200.0;  // 1/s
  double k_vis = 2.0;    // 1/s
  double svd_tolerance = 1e-8;

  /// k_rcm = min(0.8 / dt, 200).
  static HqpGains defaults(double dt);
  void validate() const;
};

struct JointLimits {
  JointVector lower;
  JointVector upper;

  static JointLimits of(const KinematicChain& chain);
};

/// Matrices of one hierarchy level in the stacked variable x = [qdot; w],
/// w = [w+; w-] the joint-limit slack:
///   Q = A^T A,  p = -A^T b,  G = [C*N  -I],  h = d - C*qdot_prev.
/// Level 1 uses N = I and qdot_prev = 0.
struct LevelBlocks {
  Eigen::MatrixXd A_bar;
  Eigen::VectorXd b_bar;
  Eigen::MatrixXd Q;
  Eigen::VectorXd p;
  Eigen::MatrixXd C;  // [I; -I]
  Eigen::VectorXd d;  // [(q+ - q)/dt; -(q- - q)/dt]
  Eigen::MatrixXd G;
  Eigen::VectorXd h;

  QpProblem problem() const { return {Q, p, G, h}; }
};

/// Minimum-norm least-squares step qdot = J^+ xdot_des through an SVD with a
/// relative singular-value cutoff.
JointVector baseline_pinv_step(const Eigen::MatrixXd& jacobian, const Eigen::VectorXd& xdot_des,
                               double svd_tolerance);

/// Level 1: min |J_rcm qdot - k_rcm e_rcm|^2 + 1/2 |w|^2 with slack-relaxed
/// velocity bounds derived from the joint limits.
LevelBlocks build_level1(const Eigen::RowVectorXd& j_rcm, double e_rcm, const HqpGains& gains,
                         const JointVector& q, const JointLimits& limits, double dt);

/// N1 = I - J_rcm^+ J_rcm. Returns I when |J_rcm| is below the cutoff.
Eigen::MatrixXd null_space_projector(const Eigen::RowVectorXd& j_rcm, double svd_tolerance);

/// Level 2: min |J_vis (N1 z + qdot1) + k_vis e_vis|^2 + 1/2 |w|^2, with the
/// velocity bounds applied to the composed velocity N1 z + qdot1.
LevelBlocks build_level2(const Eigen::Matrix<double, 2, Eigen::Dynamic>& j_vis,
                         const Eigen::Vector2d& e_vis, const HqpGains& gains,
                         const JointVector& qdot1, const Eigen::MatrixXd& n1, const JointVector& q,
                         const JointLimits& limits, double dt);

enum class LevelStatus { Solved, MaxIterations, Infeasible, Skipped };

std::string_view to_string(LevelStatus status);

struct HqpResult {
  JointVector qdot1;     // level-1 optimum
  JointVector qdot2;     // level-2 null-space coordinate
  JointVector qdot_sol;  // N1 qdot2 + qdot1
  double slack1_norm = 0.0;
  double slack2_norm = 0.0;
  Eigen::MatrixXd n1;
  double level1_time = 0.0;  // s
  double level2_time = 0.0;  // s
  LevelStatus status1 = LevelStatus::Skipped;
  LevelStatus status2 = LevelStatus::Skipped;

  bool solved() const { return status1 == LevelStatus::Solved && status2 == LevelStatus::Solved; }
  double solve_time() const { return level1_time + level2_time; }
};

/// Two-level task hierarchy: the RCM task strictly dominates the visual task.
/// Keeps per-level warm starts, so one instance serves one control loop.
///
/// Failure handling: a failed level 2 returns the level-1 velocity, a failed
/// level 1 returns zero velocity. Neither raises.
class HqpController {
 public:
  explicit HqpController(HqpGains gains, QpSettings settings = {});

  HqpResult solve(const Eigen::RowVectorXd& j_rcm, double e_rcm,
                  const Eigen::Matrix<double, 2, Eigen::Dynamic>& j_vis, const Eigen::Vector2d& e_vis,
                  const JointVector& q, const JointLimits& limits, double dt);

  const HqpGains& gains() const { return gains_; }
  void reset_warm_start();

 private:
  HqpGains gains_;
  QpSolver level1_solver_;
  QpSolver level2_solver_;
  std::optional<Eigen::VectorXd> warm1_;
  std::optional<Eigen::VectorXd> warm2_;
};

/// Single control step from scratch: evaluates both tasks at q and solves the
/// hierarchy. Geometry errors propagate.
HqpResult solve_step(const KinematicChain& chain, const JointVector& q, const TrocarConfig& trocar,
                     const Marker& marker, const CameraIntrinsics& intrinsics, const HqpGains& gains,
                     const JointLimits& limits, double dt, const QpSettings& qp_settings = {});

}  // namespace rcmhqp
