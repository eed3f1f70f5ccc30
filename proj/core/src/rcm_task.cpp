#include "rcmhqp/rcm_task.hpp"

#include "rcmhqp/error.hpp"

namespace rcmhqp {

namespace {

constexpr double kMinShaftLength = 1e-9;

RcmState project_onto_shaft(const KinematicChain& chain, const JointVector& q,
                            const TrocarConfig& trocar) {
  const std::vector<Pose> frames = frame_poses(chain, q);
  RcmState s;
  s.p_pre = frames[chain.pre_rcm_frame()].position;
  s.p_tip = frames[chain.shaft_tip_frame()].position;
  const Eigen::Vector3d p_s = s.p_tip - s.p_pre;
  s.shaft_length = p_s.norm();
  if (!(s.shaft_length > kMinShaftLength)) {
    throw GeometryError("degenerate shaft: pre-RCM frame and tip coincide");
  }
  s.shaft_dir = p_s / s.shaft_length;
  s.p_r = trocar.position - s.p_pre;
  s.shaft_param = s.p_r.dot(s.shaft_dir);
  s.p_rcm = s.p_pre + s.shaft_param * s.shaft_dir;
  const Eigen::Vector3d offset = trocar.position - s.p_rcm;
  s.e_rcm = offset.norm();
  s.degenerate = !(s.e_rcm > kRcmDegenerateError);
  if (!s.degenerate) s.error_dir = offset / s.e_rcm;
  return s;
}

}  // namespace

Eigen::RowVectorXd rcm_jacobian_along(const KinematicChain& chain, const JointVector& q,
                                      const RcmState& state, const Eigen::Vector3d& direction) {
  const PositionJacobian j_pre = position_jacobian(chain, q, chain.pre_rcm_frame());
  const PositionJacobian j_tip = position_jacobian(chain, q, chain.shaft_tip_frame());
  const Eigen::Vector3d& s = state.shaft_dir;
  const Eigen::Matrix3d perp = Eigen::Matrix3d::Identity() - s * s.transpose();

  const Eigen::Matrix<double, 3, Eigen::Dynamic> ds_dq = perp * (j_tip - j_pre) / state.shaft_length;
  const Eigen::Matrix3d lever = s * state.p_r.transpose() + state.p_r.dot(s) * Eigen::Matrix3d::Identity();
  const Eigen::Matrix<double, 3, Eigen::Dynamic> dp_rcm = perp * j_pre + lever * ds_dq;
  return direction.transpose() * dp_rcm;
}

Eigen::RowVectorXd rcm_jacobian(const KinematicChain& chain, const JointVector& q,
                                const RcmState& state) {
  if (state.degenerate) {
    throw GeometryError("RCM error direction undefined (e_rcm below threshold)");
  }
  return rcm_jacobian_along(chain, q, state, state.error_dir);
}

RcmState compute_rcm_state(const KinematicChain& chain, const JointVector& q,
                           const TrocarConfig& trocar,
                           const std::optional<Eigen::Vector3d>& fallback_dir) {
  RcmState s = project_onto_shaft(chain, q, trocar);
  if (!s.degenerate) {
    s.j_rcm = rcm_jacobian(chain, q, s);
  } else if (fallback_dir) {
    s.j_rcm = rcm_jacobian_along(chain, q, s, *fallback_dir);
  } else {
    s.j_rcm = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(chain.dof()));
  }
  return s;
}

}  // namespace rcmhqp
