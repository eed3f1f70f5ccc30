#pragma once

#include <Eigen/Dense>

namespace rcmhqp {

struct OtgLimits {
  Eigen::VectorXd v_max;  // per axis, units/s
  Eigen::VectorXd a_max;  // per axis, units/s^2

  void validate() const;
};

struct OtgState {
  Eigen::VectorXd pos;
  Eigen::VectorXd vel;
};

/// One cycle of an independent-axis, trapezoidal-velocity online trajectory
/// generator. Each axis moves toward its target with |dv| <= a_max*dt and
/// |v| <= v_max, braking on the discrete-time stopping profile so it lands on
/// the target instead of oscillating around it.
OtgState otg_step(const OtgState& state, const Eigen::VectorXd& target, const OtgLimits& limits,
                  double dt);

}  // namespace rcmhqp
