#pragma once

#include <Eigen/Dense>

#include "rcmhqp/kinematics.hpp"

namespace rcmhqp {

/// Square-pixel pinhole camera without skew or distortion.
struct CameraIntrinsics {
  double focal = 800.0;  // px
  double cu = 320.0;     // principal point, px
  double cv = 256.0;
  int width = 640;
  int height = 512;

  void validate() const;  // throws ConfigError
};

struct Marker {
  int id = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // base frame, m
};

struct ImagePoint {
  double u = 0.0;
  double v = 0.0;
};

bool in_image(const ImagePoint& pt, const CameraIntrinsics& intrinsics);

struct Projection {
  ImagePoint pixel;
  double depth = 0.0;  // along the optical axis, m
};

inline constexpr double kMinDepth = 1e-6;

/// Pinhole projection of a base-frame point seen from `camera_pose`.
/// Throws GeometryError when the point is not in front of the camera.
Projection project(const Pose& camera_pose, const CameraIntrinsics& intrinsics,
                   const Eigen::Vector3d& point);

/// Point-feature interaction matrix in pixel units. Maps the camera twist
/// (v, w), expressed in the camera frame, to (du/dt, dv/dt) of a static point.
Eigen::Matrix<double, 2, 6> interaction_matrix(const ImagePoint& pt, double depth,
                                               const CameraIntrinsics& intrinsics);

struct VisualTask {
  Eigen::Matrix<double, 2, Eigen::Dynamic> jacobian;  // px per rad
  Eigen::Vector2d error = Eigen::Vector2d::Zero();    // (u - cu, v - cv), px
  ImagePoint pixel;
  double depth = 0.0;
};

/// J_vis = L * blockdiag(R^T, R^T) * J_geom(camera frame), with R the camera
/// orientation in the base frame.
VisualTask visual_jacobian(const KinematicChain& chain, const JointVector& q,
                           const CameraIntrinsics& intrinsics, const Marker& marker);

}  // namespace rcmhqp
