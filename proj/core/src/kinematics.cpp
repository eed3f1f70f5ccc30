#include "rcmhqp/kinematics.hpp"

#include <cmath>
#include <algorithm>
#include <string>
#include <utility>

#include "rcmhqp/error.hpp"

namespace rcmhqp {

Pose Pose::from_quaternion(const Eigen::Vector3d& position, const Eigen::Quaterniond& q) {
  const double norm = q.norm();
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > 1e-6) {
    throw ConfigError("quaternion must have unit norm (got " + std::to_string(norm) + ")");
  }
  Pose pose;
  pose.rotation = q.normalized().toRotationMatrix();
  pose.position = position;
  return pose;
}

Pose Pose::operator*(const Pose& rhs) const {
  Pose out;
  out.rotation = rotation * rhs.rotation;
  out.position = rotation * rhs.position + position;
  return out;
}

Pose Pose::inverse() const {
  Pose out;
  out.rotation = rotation.transpose();
  out.position = -(out.rotation * position);
  return out;
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = position;
  return m;
}

bool Pose::is_proper(double tol) const {
  if (!rotation.allFinite() || !position.allFinite()) return false;
  const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
}

Pose dh_transform(const JointSpec& joint, double q) {
  const double theta = q + joint.theta_offset;
  const double ct = std::cos(theta), st = std::sin(theta);
  const double ca = std::cos(joint.alpha), sa = std::sin(joint.alpha);
  Pose t;
  t.rotation << ct, -st * ca, st * sa,
                st, ct * ca, -ct * sa,
                0.0, sa, ca;
  t.position << joint.a * ct, joint.a * st, joint.d;
  return t;
}

KinematicChain::KinematicChain(std::vector<JointSpec> joints, Pose tool_transform, Pose camera_mount,
                               std::optional<std::size_t> pre_rcm_frame)
    : joints_(std::move(joints)),
      tool_transform_(std::move(tool_transform)),
      camera_mount_(std::move(camera_mount)),
      pre_rcm_frame_(pre_rcm_frame.value_or(joints_.size())) {
  if (joints_.empty()) throw ConfigError("chain needs at least one joint");
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    const JointSpec& j = joints_[i];
    const std::string where = "joint " + std::to_string(i) + ": ";
    if (!std::isfinite(j.a) || !std::isfinite(j.alpha) || !std::isfinite(j.d) ||
        !std::isfinite(j.theta_offset)) {
      throw ConfigError(where + "DH parameters must be finite");
    }
    if (!std::isfinite(j.q_min) || !std::isfinite(j.q_max) || !(j.q_min < j.q_max)) {
      throw ConfigError(where + "requires finite q_min < q_max");
    }
  }
  if (pre_rcm_frame_ >= shaft_tip_frame()) {
    throw ConfigError("pre_rcm_frame must be a joint frame (0.." + std::to_string(joints_.size()) + ")");
  }
  if (!tool_transform_.is_proper()) throw ConfigError("tool_transform rotation is not proper orthonormal");
  if (!camera_mount_.is_proper()) throw ConfigError("camera_mount rotation is not proper orthonormal");
}

KinematicChain KinematicChain::default_6r() {
  constexpr double half_pi = std::numbers::pi / 2.0;
  constexpr double deg = std::numbers::pi / 180.0;
  std::vector<JointSpec> joints = {
      {0.0, half_pi, 0.345, 0.0, -170 * deg, 170 * deg},
      {0.35, 0.0, 0.0, half_pi, -120 * deg, 120 * deg},
      {0.0, half_pi, 0.0, half_pi, -125 * deg, 155 * deg},
      {0.0, -half_pi, 0.35, 0.0, -270 * deg, 270 * deg},
      {0.0, half_pi, 0.0, 0.0, -120 * deg, 120 * deg},
      {0.0, 0.0, 0.08, 0.0, -360 * deg, 360 * deg},
  };
  Pose tool;
  tool.position = Eigen::Vector3d(0.0, 0.0, 0.20);
  return KinematicChain(std::move(joints), tool, tool);
}

JointVector KinematicChain::lower_limits() const {
  JointVector v(dof());
  for (std::size_t i = 0; i < dof(); ++i) v[static_cast<Eigen::Index>(i)] = joints_[i].q_min;
  return v;
}

JointVector KinematicChain::upper_limits() const {
  JointVector v(dof());
  for (std::size_t i = 0; i < dof(); ++i) v[static_cast<Eigen::Index>(i)] = joints_[i].q_max;
  return v;
}

void KinematicChain::check_joint_vector(const JointVector& q) const {
  if (static_cast<std::size_t>(q.size()) != dof()) {
    throw ConfigError("joint vector has " + std::to_string(q.size()) + " entries, chain has " +
                      std::to_string(dof()) + " joints");
  }
  if (!q.allFinite()) throw ConfigError("joint vector contains non-finite entries");
}

namespace {

void check_frame(const KinematicChain& chain, std::size_t frame) {
  if (frame >= chain.frame_count()) {
    throw ConfigError("frame index " + std::to_string(frame) + " out of range (max " +
                      std::to_string(chain.frame_count() - 1) + ")");
  }
}

}  // namespace

std::vector<Pose> frame_poses(const KinematicChain& chain, const JointVector& q) {
  chain.check_joint_vector(q);
  std::vector<Pose> frames;
  frames.reserve(chain.frame_count());
  frames.push_back(Pose::identity());
  for (std::size_t i = 0; i < chain.dof(); ++i) {
    frames.push_back(frames.back() * dh_transform(chain.joints()[i], q[static_cast<Eigen::Index>(i)]));
  }
  const Pose last = frames.back();
  frames.push_back(last * chain.tool_transform());
  frames.push_back(last * chain.camera_mount());
  return frames;
}

Pose forward_kinematics(const KinematicChain& chain, const JointVector& q, std::size_t frame) {
  check_frame(chain, frame);
  chain.check_joint_vector(q);
  Pose pose;
  const std::size_t joints = std::min(frame, chain.dof());
  for (std::size_t i = 0; i < joints; ++i) {
    pose = pose * dh_transform(chain.joints()[i], q[static_cast<Eigen::Index>(i)]);
  }
  if (frame == chain.shaft_tip_frame()) pose = pose * chain.tool_transform();
  if (frame == chain.camera_frame()) pose = pose * chain.camera_mount();
  return pose;
}

GeometricJacobian geometric_jacobian(const KinematicChain& chain, const JointVector& q,
                                     std::size_t frame) {
  check_frame(chain, frame);
  const std::vector<Pose> frames = frame_poses(chain, q);
  const Eigen::Vector3d p_frame = frames[frame].position;
  const std::size_t n = chain.dof();
  const std::size_t moving = std::min(frame, n);

  GeometricJacobian jac = GeometricJacobian::Zero(6, static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < moving; ++j) {
    // Joint j+1 turns about z of frame j.
    const Eigen::Vector3d z = frames[j].rotation.col(2);
    const auto col = static_cast<Eigen::Index>(j);
    jac.block<3, 1>(0, col) = z.cross(p_frame - frames[j].position);
    jac.block<3, 1>(3, col) = z;
  }
  return jac;
}

PositionJacobian position_jacobian(const KinematicChain& chain, const JointVector& q,
                                   std::size_t frame) {
  return geometric_jacobian(chain, q, frame).topRows<3>();
}

PositionJacobian numeric_jacobian(const KinematicChain& chain, const JointVector& q,
                                  std::size_t frame, double step) {
  if (!(step > 0.0)) throw ConfigError("finite-difference step must be positive");
  check_frame(chain, frame);
  chain.check_joint_vector(q);
  PositionJacobian jac(3, q.size());
  for (Eigen::Index j = 0; j < q.size(); ++j) {
    JointVector plus = q, minus = q;
    plus[j] += step;
    minus[j] -= step;
    jac.col(j) = (forward_kinematics(chain, plus, frame).position -
                  forward_kinematics(chain, minus, frame).position) / (2.0 * step);
  }
  return jac;
}

}  // namespace rcmhqp
