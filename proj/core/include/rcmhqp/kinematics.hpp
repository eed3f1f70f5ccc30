#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <numbers>
#include <optional>
#include <vector>

namespace rcmhqp {

using JointVector = Eigen::VectorXd;
using PositionJacobian = Eigen::Matrix<double, 3, Eigen::Dynamic>;
using GeometricJacobian = Eigen::Matrix<double, 6, Eigen::Dynamic>;

/// Rigid transform. `rotation` maps child-frame coordinates into the parent frame.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d position = Eigen::Vector3d::Zero();

  static Pose identity() { return {}; }
  static Pose from_quaternion(const Eigen::Vector3d& position, const Eigen::Quaterniond& q);

  Pose operator*(const Pose& rhs) const;
  Pose inverse() const;
  Eigen::Vector3d transform(const Eigen::Vector3d& p) const { return rotation * p + position; }
  Eigen::Matrix4d matrix() const;

  // Orthonormal with det +1 within tol.
  bool is_proper(double tol = 1e-10) const;
};

/// Revolute joint in standard Denavit-Hartenberg form:
///   T(q) = Rz(q + theta_offset) * Tz(d) * Tx(a) * Rx(alpha)
/// The joint rotates about the z axis of the preceding frame.
struct JointSpec {
  double a = 0.0;
  double alpha = 0.0;
  double d = 0.0;
  double theta_offset = 0.0;
  double q_min = -std::numbers::pi;
  double q_max = std::numbers::pi;
};

Pose dh_transform(const JointSpec& joint, double q);

/// Serial revolute chain carrying a rigid endoscope and a camera.
///
/// Frame indexing: frame 0 is the base, frame i (1..n) is the frame after
/// joint i, frame n+1 is the shaft tip (last joint frame * tool_transform) and
/// frame n+2 is the camera optical frame (last joint frame * camera_mount).
/// The camera looks along its +z axis.
class KinematicChain {
 public:
  /// Throws ConfigError when the description is inconsistent. `pre_rcm_frame`
  /// defaults to the last joint frame (the endoscope mount).
  KinematicChain(std::vector<JointSpec> joints, Pose tool_transform, Pose camera_mount,
                 std::optional<std::size_t> pre_rcm_frame = std::nullopt);

  /// Anthropomorphic 6R arm with a spherical wrist and a 0.2 m endoscope
  /// whose camera looks along the shaft from the tip.
  static KinematicChain default_6r();

  std::size_t dof() const { return joints_.size(); }
  const std::vector<JointSpec>& joints() const { return joints_; }
  const Pose& tool_transform() const { return tool_transform_; }
  const Pose& camera_mount() const { return camera_mount_; }

  std::size_t pre_rcm_frame() const { return pre_rcm_frame_; }
  std::size_t shaft_tip_frame() const { return joints_.size() + 1; }
  std::size_t camera_frame() const { return joints_.size() + 2; }
  std::size_t frame_count() const { return joints_.size() + 3; }

  JointVector lower_limits() const;
  JointVector upper_limits() const;

  // Throws ConfigError on a wrong length or non-finite entry.
  void check_joint_vector(const JointVector& q) const;

 private:
  std::vector<JointSpec> joints_;
  Pose tool_transform_;
  Pose camera_mount_;
  std::size_t pre_rcm_frame_;
};

/// All frames 0..n+2 in the base frame.
std::vector<Pose> frame_poses(const KinematicChain& chain, const JointVector& q);

Pose forward_kinematics(const KinematicChain& chain, const JointVector& q, std::size_t frame);

/// Linear-velocity Jacobian of the origin of `frame`. Column j is
/// z_j x (p_frame - p_j) for joints proximal to the frame, zero otherwise.
PositionJacobian position_jacobian(const KinematicChain& chain, const JointVector& q,
                                   std::size_t frame);

/// Stacked [linear; angular] Jacobian of `frame`, both in the base frame.
GeometricJacobian geometric_jacobian(const KinematicChain& chain, const JointVector& q,
                                     std::size_t frame);

/// Central-difference approximation of position_jacobian. Used as a test and
/// audit oracle only.
PositionJacobian numeric_jacobian(const KinematicChain& chain, const JointVector& q,
                                  std::size_t frame, double step);

}  // namespace rcmhqp
