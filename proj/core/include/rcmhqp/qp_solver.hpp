#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string_view>

namespace rcmhqp {

/// min 1/2 x^T Q x + p^T x  subject to  G x <= h.
/// Q must be symmetric positive semidefinite.
struct QpProblem {
  Eigen::MatrixXd Q;
  Eigen::VectorXd p;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;

  Eigen::Index dim() const { return Q.rows(); }
  Eigen::Index num_constraints() const { return G.rows(); }
  double objective(const Eigen::VectorXd& x) const { return 0.5 * x.dot(Q * x) + p.dot(x); }

  /// Throws ConfigError on inconsistent shapes, non-finite data or asymmetric Q.
  void validate() const;
};

struct QpSettings {
  double eps_primal = 1e-8;
  double eps_dual = 1e-8;
  int max_iter = 10000;
  /// Ridge added to Q, relative to the largest diagonal entry of Q (at least 1),
  /// when the smallest eigenvalue falls below 1e-12 on the same scale.
  double regularization = 1e-10;

  void validate() const;
};

enum class QpStatus { Solved, MaxIterations, PrimalInfeasible };

std::string_view to_string(QpStatus status);

struct QpSolution {
  Eigen::VectorXd x;
  QpStatus status = QpStatus::MaxIterations;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double complementarity = 0.0;
  Eigen::VectorXd duals;  // one per row of G, >= 0
  double regularization = 0.0;  // absolute ridge that was added to Q
  double solve_time = 0.0;      // seconds
  bool warm_started = false;    // the warm-start active set was accepted

  bool solved() const { return status == QpStatus::Solved; }
};

struct KktResiduals {
  double primal = 0.0;           // max (Gx - h)_+
  double dual = 0.0;             // ||Qx + p + G^T lambda||_inf
  double complementarity = 0.0;  // max |lambda_i (Gx - h)_i|
};

KktResiduals kkt_residuals(const QpProblem& problem, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& duals);

/// Dense dual active-set solver (Goldfarb-Idnani). It starts from the
/// unconstrained minimizer and adds the most violated constraint per outer
/// iteration, dropping constraints whose multiplier would turn negative.
///
/// A warm start is used to guess the optimal active set (rows tight at the
/// warm-start point). If the guessed set yields a primal and dual feasible
/// point it is accepted in a single iteration; otherwise the solver falls
/// back to a cold start.
///
/// Status Solved certifies primal residual <= eps_primal * max(1, |h|_inf)
/// and dual residual <= eps_dual * max(1, |Qx|_inf, |p|_inf, |G^T lambda|_inf).
class QpSolver {
 public:
  explicit QpSolver(QpSettings settings = {});

  QpSolution solve(const QpProblem& problem,
                   const std::optional<Eigen::VectorXd>& warm_start = std::nullopt);

  const QpSettings& settings() const { return settings_; }

 private:
  QpSettings settings_;
  // Reused between solves.
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::MatrixXd hessian_;
  Eigen::MatrixXd inv_chol_t_;  // L^{-T}, so that H^{-1} = J0 J0^T
};

QpSolution solve_qp(const QpProblem& problem, const QpSettings& settings = {},
                    const std::optional<Eigen::VectorXd>& warm_start = std::nullopt);

}  // namespace rcmhqp
