#pragma once

#include <Eigen/Dense>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rcmhqp/kinematics.hpp"

namespace fixtures {

inline constexpr double kPi = std::numbers::pi;

// Hand-copied so the kinematics oracle does not read the library's table.
inline std::vector<oracle::DhRow> default_6r_rows() {
  return {
      {0.0, kPi / 2, 0.345, 0.0},
      {0.35, 0.0, 0.0, kPi / 2},
      {0.0, kPi / 2, 0.0, kPi / 2},
      {0.0, -kPi / 2, 0.35, 0.0},
      {0.0, kPi / 2, 0.0, 0.0},
      {0.0, 0.0, 0.08, 0.0},
  };
}

inline constexpr double kToolLength = 0.20;

inline rcmhqp::JointVector random_q(const rcmhqp::KinematicChain& chain, std::mt19937_64& rng,
                                    double margin_fraction = 0.05) {
  rcmhqp::JointVector q(static_cast<Eigen::Index>(chain.dof()));
  for (std::size_t i = 0; i < chain.dof(); ++i) {
    const auto& j = chain.joints()[i];
    const double m = margin_fraction * (j.q_max - j.q_min);
    std::uniform_real_distribution<double> d(j.q_min + m, j.q_max - m);
    q[static_cast<Eigen::Index>(i)] = d(rng);
  }
  return q;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = d(rng);
  return m;
}

/// The shipped replica scenario's initial configuration.
inline rcmhqp::JointVector replica_q0() {
  rcmhqp::JointVector q(6);
  q << 0.0, -0.692416305951276, -1.0984286962338359, 0.0, -1.3507476514046812, 0.0;
  return q;
}

inline const Eigen::Vector3d kReplicaTrocar{0.565, 0.0, 0.268};

inline std::string scenario_path(const std::string& name) {
  return std::string(RCMHQP_SCENARIO_DIR) + "/" + name;
}

}  // namespace fixtures
