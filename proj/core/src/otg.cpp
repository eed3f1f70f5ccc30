#include "rcmhqp/otg.hpp"

#include <algorithm>
#include <cmath>

#include "rcmhqp/error.hpp"

namespace rcmhqp {

void OtgLimits::validate() const {
  if (v_max.size() != a_max.size() || v_max.size() == 0) throw ConfigError("OTG limits: axis count mismatch");
  if (!((v_max.array() > 0.0).all() && (a_max.array() > 0.0).all())) {
    throw ConfigError("OTG limits must be positive");
  }
  if (!v_max.allFinite() || !a_max.allFinite()) throw ConfigError("OTG limits must be finite");
}

namespace {

// Largest speed v such that moving at v for one cycle and then braking by dv
// per cycle stops within `distance`. With j full braking cycles the travel is
// dt*((j+1)*v - dv*j*(j+1)/2); j follows from m*(m+1)/2 = distance/(dv*dt).
double braking_speed(double distance, double dv, double dt) {
  const double m = 0.5 * (std::sqrt(1.0 + 8.0 * distance / (dv * dt)) - 1.0);
  const double j = std::floor(m);
  return distance / dt / (j + 1.0) + 0.5 * dv * j;
}

}  // namespace

OtgState otg_step(const OtgState& state, const Eigen::VectorXd& target, const OtgLimits& limits,
                  double dt) {
  if (!(dt > 0.0)) throw ConfigError("OTG step needs dt > 0");
  const Eigen::Index axes = state.pos.size();
  if (state.vel.size() != axes || target.size() != axes || limits.v_max.size() != axes ||
      limits.a_max.size() != axes) {
    throw ConfigError("OTG: axis count mismatch");
  }
  OtgState next = state;
  for (Eigen::Index i = 0; i < axes; ++i) {
    const double remaining = target[i] - state.pos[i];
    const double distance = std::abs(remaining);
    const double dv = limits.a_max[i] * dt;
    double desired = 0.0;
    if (distance > 0.0) {
      const double speed = std::min({limits.v_max[i], braking_speed(distance, dv, dt), distance / dt});
      desired = std::copysign(speed, remaining);
    }
    const double change = std::clamp(desired - state.vel[i], -dv, dv);
    next.vel[i] = state.vel[i] + change;
    next.pos[i] = state.pos[i] + next.vel[i] * dt;
  }
  return next;
}

}  // namespace rcmhqp
