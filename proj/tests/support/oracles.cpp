#include "oracles.hpp"

#include <cmath>
#include <limits>

namespace oracle {

Eigen::Matrix4d dh_chain(const std::vector<DhRow>& rows, const Eigen::VectorXd& q) {
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const DhRow& r = rows[i];
    const double th = q[static_cast<Eigen::Index>(i)] + r.theta_offset;
    const double ct = std::cos(th), st = std::sin(th), ca = std::cos(r.alpha), sa = std::sin(r.alpha);
    Eigen::Matrix4d a;
    a << ct, -st * ca, st * sa, r.a * ct,
         st, ct * ca, -ct * sa, r.a * st,
         0, sa, ca, r.d,
         0, 0, 0, 1;
    t = t * a;
  }
  return t;
}

double closest_line_param(const Eigen::Vector3d& p0, const Eigen::Vector3d& dir,
                          const Eigen::Vector3d& target, double t_lo, double t_hi, long samples) {
  double best_t = t_lo;
  double best = std::numeric_limits<double>::infinity();
  for (long i = 0; i < samples; ++i) {
    const double t = t_lo + (t_hi - t_lo) * static_cast<double>(i) / static_cast<double>(samples - 1);
    const double dist = (target - (p0 + t * dir)).squaredNorm();
    if (dist < best) {
      best = dist;
      best_t = t;
    }
  }
  return best_t;
}

Eigen::Vector2d homogeneous_projection(double focal, double cu, double cv, const Eigen::Matrix3d& rotation,
                                       const Eigen::Vector3d& center, const Eigen::Vector3d& point) {
  Eigen::Matrix3d k;
  k << focal, 0, cu,
       0, focal, cv,
       0, 0, 1;
  Eigen::Matrix<double, 3, 4> extrinsic;
  extrinsic.leftCols<3>() = rotation.transpose();
  extrinsic.col(3) = -rotation.transpose() * center;
  const Eigen::Vector3d hom = k * extrinsic * point.homogeneous();
  return hom.hnormalized();
}

std::optional<QpOracleResult> brute_force_qp(const Eigen::MatrixXd& Q, const Eigen::VectorXd& p,
                                             const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                                             double ridge) {
  const Eigen::Index n = Q.rows();
  const Eigen::Index m = G.rows();
  const Eigen::MatrixXd H = Q + ridge * Eigen::MatrixXd::Identity(n, n);
  std::optional<QpOracleResult> best;
  for (long mask = 0; mask < (1L << m); ++mask) {
    std::vector<int> active;
    for (int i = 0; i < m; ++i) {
      if (mask & (1L << i)) active.push_back(i);
    }
    const auto k = static_cast<Eigen::Index>(active.size());
    if (k > n) continue;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
    Eigen::VectorXd rhs(n + k);
    kkt.topLeftCorner(n, n) = H;
    rhs.head(n) = -p;
    for (Eigen::Index j = 0; j < k; ++j) {
      kkt.block(0, n + j, n, 1) = G.row(active[j]).transpose();
      kkt.block(n + j, 0, 1, n) = G.row(active[j]);
      rhs(n + j) = h(active[j]);
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd x = sol.head(n);
    const Eigen::VectorXd lambda = sol.tail(k);
    if (k > 0 && lambda.minCoeff() < -1e-9) continue;
    if (m > 0 && ((G * x - h).array() > 1e-9 * (1.0 + h.cwiseAbs().array())).any()) continue;
    const double obj = 0.5 * x.dot(H * x) + p.dot(x);
    if (!best || obj < best->objective) best = QpOracleResult{x, obj, active};
  }
  return best;
}

}  // namespace oracle
