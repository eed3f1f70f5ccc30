#include "rcmhqp/qp_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rcmhqp/error.hpp"

namespace rcmhqp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinEigenRatio = 1e-12;
constexpr int kRefinementPasses = 5;

// H^{-1} = J J^T with J^T N_A = [R; 0]. The first q columns of J span the
// constraint directions, the remaining ones the null space of the active set.
struct ActiveBasis {
  Eigen::MatrixXd J;
  Eigen::MatrixXd R;
};

ActiveBasis factor_active_set(const Eigen::MatrixXd& j0, const Eigen::MatrixXd& normals) {
  ActiveBasis basis;
  const Eigen::Index q = normals.cols();
  if (q == 0) {
    basis.J = j0;
    basis.R.resize(0, 0);
    return basis;
  }
  const Eigen::Index n = j0.rows();
  const Eigen::MatrixXd m = j0.transpose() * normals;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  const Eigen::MatrixXd qh = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  basis.J = j0 * qh;
  basis.R = qr.matrixQR().topRows(q).triangularView<Eigen::Upper>();
  return basis;
}

bool well_conditioned(const Eigen::MatrixXd& r) {
  if (r.rows() == 0) return true;
  const Eigen::VectorXd diag = r.diagonal().cwiseAbs();
  return diag.minCoeff() > 1e-10 * std::max(1.0, diag.maxCoeff());
}

double feasibility_tol(double h_i, double gx_i) {
  return 1e-12 * (1.0 + std::abs(h_i) + std::abs(gx_i));
}

Eigen::MatrixXd gather_normals(const Eigen::MatrixXd& g, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd normals(g.cols(), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    normals.col(static_cast<Eigen::Index>(k)) = -g.row(rows[k]).transpose();
  }
  return normals;
}

struct EqualitySolution {
  Eigen::VectorXd x;
  Eigen::VectorXd u;  // multipliers of the active rows
};

// Minimizer of 1/2 x^T H x + c^T x with the rows in `active` held tight.
std::optional<EqualitySolution> solve_on_active_set(const Eigen::LLT<Eigen::MatrixXd>& llt,
                                                    const Eigen::MatrixXd& j0, const Eigen::MatrixXd& g,
                                                    const Eigen::VectorXd& h,
                                                    const std::vector<Eigen::Index>& active,
                                                    const Eigen::VectorXd& c) {
  EqualitySolution out;
  out.x = llt.solve(-c);
  const auto q = static_cast<Eigen::Index>(active.size());
  out.u = Eigen::VectorXd::Zero(q);
  if (q == 0) return out;
  const Eigen::MatrixXd normals = gather_normals(g, active);
  const ActiveBasis basis = factor_active_set(j0, normals);
  if (!well_conditioned(basis.R)) return std::nullopt;
  Eigen::VectorXd rhs(q);
  for (Eigen::Index k = 0; k < q; ++k) rhs[k] = g.row(active[k]).dot(out.x) - h[active[k]];
  const Eigen::VectorXd y = basis.R.transpose().triangularView<Eigen::Lower>().solve(rhs);
  out.u = basis.R.triangularView<Eigen::Upper>().solve(y);
  out.x += j0 * (j0.transpose() * (normals * out.u));
  return out;
}

}  // namespace

std::string_view to_string(QpStatus status) {
  switch (status) {
    case QpStatus::Solved: return "solved";
    case QpStatus::MaxIterations: return "max_iter";
    case QpStatus::PrimalInfeasible: return "infeasible";
  }
  return "unknown";
}

void QpProblem::validate() const {
  const Eigen::Index n = Q.rows();
  if (n == 0 || Q.cols() != n) throw ConfigError("QP: Q must be square and non-empty");
  if (p.size() != n) throw ConfigError("QP: p has wrong length");
  if (G.rows() != h.size()) throw ConfigError("QP: G and h disagree on constraint count");
  if (G.rows() > 0 && G.cols() != n) throw ConfigError("QP: G has wrong column count");
  if (!Q.allFinite() || !p.allFinite() || !G.allFinite() || !h.allFinite()) {
    throw ConfigError("QP: non-finite problem data");
  }
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() >= 1e-10) throw ConfigError("QP: Q is not symmetric");
}

void QpSettings::validate() const {
  if (!(eps_primal > 0.0) || !(eps_dual > 0.0)) throw ConfigError("QP tolerances must be positive");
  if (max_iter < 1) throw ConfigError("QP max_iter must be >= 1");
  if (!(regularization > 0.0)) throw ConfigError("QP regularization must be positive");
}

KktResiduals kkt_residuals(const QpProblem& problem, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& duals) {
  KktResiduals res;
  Eigen::VectorXd stationarity = problem.Q * x + problem.p;
  if (problem.num_constraints() > 0) {
    const Eigen::VectorXd slack = problem.G * x - problem.h;
    res.primal = std::max(0.0, slack.maxCoeff());
    res.complementarity = duals.cwiseProduct(slack).cwiseAbs().maxCoeff();
    stationarity += problem.G.transpose() * duals;
  }
  res.dual = stationarity.cwiseAbs().maxCoeff();
  return res;
}

QpSolver::QpSolver(QpSettings settings) : settings_(settings) { settings_.validate(); }

QpSolution QpSolver::solve(const QpProblem& problem, const std::optional<Eigen::VectorXd>& warm_start) {
  const auto start = std::chrono::steady_clock::now();
  problem.validate();
  const Eigen::Index n = problem.dim();
  const Eigen::Index m = problem.num_constraints();
  const Eigen::MatrixXd& g = problem.G;
  const Eigen::VectorXd& h = problem.h;

  QpSolution sol;
  sol.duals = Eigen::VectorXd::Zero(m);

  // Ridge on the scale of Q so the factorization stays meaningful for
  // rank-deficient task Hessians with large entries.
  const double scale = std::max(1.0, problem.Q.diagonal().cwiseAbs().maxCoeff());
  hessian_ = problem.Q;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hessian_, Eigen::EigenvaluesOnly);
  const double lambda_min = eig.eigenvalues()(0);
  if (lambda_min < -1e-8 * scale) throw ConfigError("QP: Q is not positive semidefinite");
  if (lambda_min < kMinEigenRatio * scale) {
    sol.regularization = settings_.regularization * scale;
    hessian_.diagonal().array() += sol.regularization;
  }
  llt_.compute(hessian_);
  if (llt_.info() != Eigen::Success) throw ConfigError("QP: Cholesky factorization failed");
  inv_chol_t_ = llt_.matrixU().solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::VectorXd x_unc = llt_.solve(-problem.p);

  std::vector<Eigen::Index> active;
  std::vector<double> mult;
  Eigen::VectorXd x = x_unc;
  bool done = false;
  int iterations = 0;

  auto all_feasible = [&](const Eigen::VectorXd& point) {
    if (m == 0) return true;
    const Eigen::VectorXd gx = g * point;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (h[i] - gx[i] < -feasibility_tol(h[i], gx[i])) return false;
    }
    return true;
  };

  if (warm_start && warm_start->size() == n && warm_start->allFinite() && m > 0) {
    ++iterations;
    const Eigen::VectorXd gx = g * *warm_start;
    std::vector<Eigen::Index> guess;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (std::abs(h[i] - gx[i]) <= 1e-9 * (1.0 + std::abs(h[i]))) guess.push_back(i);
    }
    if (static_cast<Eigen::Index>(guess.size()) <= n) {
      const auto eq = solve_on_active_set(llt_, inv_chol_t_, g, h, guess, problem.p);
      if (eq) {
        const double u_tol = 1e-10 * std::max(1.0, eq->u.size() > 0 ? eq->u.cwiseAbs().maxCoeff() : 0.0);
        if ((eq->u.size() == 0 || eq->u.minCoeff() >= -u_tol) && all_feasible(eq->x)) {
          x = eq->x;
          active = guess;
          mult.assign(eq->u.data(), eq->u.data() + eq->u.size());
          for (double& v : mult) v = std::max(v, 0.0);
          sol.warm_started = true;
          done = true;
        }
      }
    }
  }

  QpStatus status = QpStatus::Solved;
  while (!done) {
    if (++iterations > settings_.max_iter) {
      status = QpStatus::MaxIterations;
      break;
    }
    // Most violated inactive constraint, measured per unit normal.
    Eigen::Index add = -1;
    double worst = 0.0;
    if (m > 0) {
      const Eigen::VectorXd gx = g * x;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (std::find(active.begin(), active.end(), i) != active.end()) continue;
        const double s = h[i] - gx[i];
        if (s >= -feasibility_tol(h[i], gx[i])) continue;
        const double normalized = s / std::max(1.0, g.row(i).norm());
        if (normalized < worst) {
          worst = normalized;
          add = i;
        }
      }
    }
    if (add < 0) break;

    const Eigen::VectorXd n_add = -g.row(add).transpose();
    double u_add = 0.0;
    bool added = false;
    while (!added) {
      const Eigen::MatrixXd normals = gather_normals(g, active);
      const ActiveBasis basis = factor_active_set(inv_chol_t_, normals);
      const Eigen::Index q = normals.cols();
      const Eigen::VectorXd d = basis.J.transpose() * n_add;
      const Eigen::VectorXd d_free = d.tail(n - q);
      const Eigen::VectorXd z = basis.J.rightCols(n - q) * d_free;
      Eigen::VectorXd r = Eigen::VectorXd::Zero(q);
      if (q > 0) r = basis.R.triangularView<Eigen::Upper>().solve(d.head(q));

      // Partial step: the first active multiplier that would turn negative.
      double t_dual = kInf;
      Eigen::Index drop = -1;
      for (Eigen::Index k = 0; k < q; ++k) {
        if (r[k] > 0.0) {
          const double ratio = mult[static_cast<std::size_t>(k)] / r[k];
          if (ratio < t_dual) {
            t_dual = ratio;
            drop = k;
          }
        }
      }
      // Full step: makes the added constraint tight.
      double t_primal = kInf;
      const double s_add = h[add] - g.row(add).dot(x);
      if (d_free.norm() > 1e-12 * std::max(1.0, d.norm())) {
        const double curvature = z.dot(n_add);
        if (curvature > 0.0) t_primal = std::max(0.0, -s_add / curvature);
      }

      if (t_dual == kInf && t_primal == kInf) {
        status = QpStatus::PrimalInfeasible;
        done = true;
        break;
      }
      const double t = std::min(t_dual, t_primal);
      if (t_primal < kInf) x += t * z;
      for (Eigen::Index k = 0; k < q; ++k) {
        double& u = mult[static_cast<std::size_t>(k)];
        u = std::max(0.0, u - t * r[k]);
      }
      u_add += t;

      if (t_primal <= t_dual) {
        active.push_back(add);
        mult.push_back(u_add);
        added = true;
      } else {
        active.erase(active.begin() + drop);
        mult.erase(mult.begin() + drop);
        if (++iterations > settings_.max_iter) {
          status = QpStatus::MaxIterations;
          done = true;
          break;
        }
      }
    }
  }

  // The ridge biases x by O(regularization). Proximal refinement on the final
  // active set removes the bias: each pass solves the ridged problem with the
  // linear term shifted by -regularization * x.
  if (status == QpStatus::Solved && sol.regularization > 0.0) {
    for (int pass = 0; pass < kRefinementPasses; ++pass) {
      const Eigen::VectorXd shifted = problem.p - sol.regularization * x;
      const auto eq = solve_on_active_set(llt_, inv_chol_t_, g, h, active, shifted);
      if (!eq) break;
      const double u_tol = 1e-10 * std::max(1.0, eq->u.size() > 0 ? eq->u.cwiseAbs().maxCoeff() : 0.0);
      if ((eq->u.size() > 0 && eq->u.minCoeff() < -u_tol) || !all_feasible(eq->x)) break;
      const double change = (eq->x - x).cwiseAbs().maxCoeff();
      x = eq->x;
      mult.assign(eq->u.data(), eq->u.data() + eq->u.size());
      for (double& v : mult) v = std::max(v, 0.0);
      if (sol.regularization * change <= 1e-3 * settings_.eps_dual) break;
    }
  }

  sol.x = x;
  for (std::size_t k = 0; k < active.size(); ++k) sol.duals[active[k]] = mult[k];
  sol.iterations = iterations;
  const KktResiduals res = kkt_residuals(problem, sol.x, sol.duals);
  sol.primal_residual = res.primal;
  sol.dual_residual = res.dual;
  sol.complementarity = res.complementarity;
  if (status == QpStatus::Solved) {
    const double h_scale = std::max(1.0, m > 0 ? h.cwiseAbs().maxCoeff() : 0.0);
    double dual_scale = std::max({1.0, (problem.Q * x).cwiseAbs().maxCoeff(), problem.p.cwiseAbs().maxCoeff()});
    if (m > 0) dual_scale = std::max(dual_scale, (g.transpose() * sol.duals).cwiseAbs().maxCoeff());
    if (res.primal > settings_.eps_primal * h_scale || res.dual > settings_.eps_dual * dual_scale) {
      status = QpStatus::MaxIterations;
    }
  }
  sol.status = status;
  sol.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return sol;
}

QpSolution solve_qp(const QpProblem& problem, const QpSettings& settings,
                    const std::optional<Eigen::VectorXd>& warm_start) {
  QpSolver solver(settings);
  return solver.solve(problem, warm_start);
}

}  // namespace rcmhqp
