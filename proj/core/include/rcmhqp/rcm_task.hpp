#pragma once

#include <Eigen/Dense>
#include <optional>

#include "rcmhqp/kinematics.hpp"

namespace rcmhqp {

/// Fixed trocar (incision) point in the robot base frame, meters.
struct TrocarConfig {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
};

/// Below this distance (m) the error direction is undefined.
inline constexpr double kRcmDegenerateError = 1e-9;

/// Geometry of the shaft relative to the trocar at one configuration.
struct RcmState {
  Eigen::Vector3d p_pre = Eigen::Vector3d::Zero();   // joint frame before the RCM
  Eigen::Vector3d p_tip = Eigen::Vector3d::Zero();   // shaft tip
  Eigen::Vector3d shaft_dir = Eigen::Vector3d::UnitZ();  // unit, p_pre -> p_tip
  double shaft_length = 0.0;
  Eigen::Vector3d p_r = Eigen::Vector3d::Zero();     // p_pre -> trocar
  Eigen::Vector3d p_rcm = Eigen::Vector3d::Zero();   // closest point of the shaft line
  double e_rcm = 0.0;
  Eigen::Vector3d error_dir = Eigen::Vector3d::Zero();  // (trocar - p_rcm) / e_rcm
  double shaft_param = 0.0;  // signed distance of p_rcm from p_pre along shaft_dir
  bool degenerate = false;   // e_rcm below kRcmDegenerateError
  Eigen::RowVectorXd j_rcm;  // 1 x n, meters per radian

  bool outside_shaft() const { return shaft_param < 0.0 || shaft_param > shaft_length; }
};

/// Projects the trocar onto the (unclamped) shaft line and evaluates the RCM
/// task Jacobian. When the error is degenerate the Jacobian is built along
/// `fallback_dir` (typically the previous cycle's error direction) or left as
/// a zero row. Throws GeometryError if the shaft has zero length.
RcmState compute_rcm_state(const KinematicChain& chain, const JointVector& q,
                           const TrocarConfig& trocar,
                           const std::optional<Eigen::Vector3d>& fallback_dir = std::nullopt);

/// Jacobian of the projected shaft point along the error direction,
///   J_rcm = p_e^T [ (I - s s^T) J_pre + (s p_r^T + (p_r . s) I) ds/dq ],
///   ds/dq = (I - s s^T)(J_tip - J_pre) / |p_tip - p_pre|.
/// Positive J_rcm * qdot moves the closest shaft point toward the trocar.
/// Throws GeometryError for a degenerate state.
Eigen::RowVectorXd rcm_jacobian(const KinematicChain& chain, const JointVector& q,
                                const RcmState& state);

/// Same expression projected on an arbitrary direction instead of p_e.
Eigen::RowVectorXd rcm_jacobian_along(const KinematicChain& chain, const JointVector& q,
                                      const RcmState& state, const Eigen::Vector3d& direction);

}  // namespace rcmhqp
