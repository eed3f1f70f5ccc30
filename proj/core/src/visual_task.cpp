#include "rcmhqp/visual_task.hpp"

#include <cmath>
#include <string>

#include "rcmhqp/error.hpp"

namespace rcmhqp {

void CameraIntrinsics::validate() const {
  if (!(focal > 0.0) || !std::isfinite(focal)) throw ConfigError("camera focal length must be positive");
  if (width <= 0 || height <= 0) throw ConfigError("camera image size must be positive");
  if (!(cu >= 0.0 && cu <= width) || !(cv >= 0.0 && cv <= height)) {
    throw ConfigError("camera principal point must lie inside the image");
  }
}

bool in_image(const ImagePoint& pt, const CameraIntrinsics& intrinsics) {
  return pt.u >= 0.0 && pt.u <= intrinsics.width && pt.v >= 0.0 && pt.v <= intrinsics.height;
}

Projection project(const Pose& camera_pose, const CameraIntrinsics& intrinsics,
                   const Eigen::Vector3d& point) {
  const Eigen::Vector3d p_cam = camera_pose.rotation.transpose() * (point - camera_pose.position);
  if (!(p_cam.z() > kMinDepth)) {
    throw GeometryError("marker is behind the camera (depth " + std::to_string(p_cam.z()) + " m)");
  }
  Projection out;
  out.depth = p_cam.z();
  out.pixel.u = intrinsics.cu + intrinsics.focal * p_cam.x() / p_cam.z();
  out.pixel.v = intrinsics.cv + intrinsics.focal * p_cam.y() / p_cam.z();
  return out;
}

Eigen::Matrix<double, 2, 6> interaction_matrix(const ImagePoint& pt, double depth,
                                               const CameraIntrinsics& intrinsics) {
  if (!(depth > kMinDepth)) throw GeometryError("interaction matrix needs positive depth");
  const double f = intrinsics.focal;
  const double u = pt.u - intrinsics.cu;
  const double v = pt.v - intrinsics.cv;
  const double z = depth;
  Eigen::Matrix<double, 2, 6> l;
  l << -f / z, 0.0, u / z, u * v / f, -(f * f + u * u) / f, v,
       0.0, -f / z, v / z, (f * f + v * v) / f, -u * v / f, -u;
  return l;
}

VisualTask visual_jacobian(const KinematicChain& chain, const JointVector& q,
                           const CameraIntrinsics& intrinsics, const Marker& marker) {
  const Pose camera = forward_kinematics(chain, q, chain.camera_frame());
  const Projection proj = project(camera, intrinsics, marker.position);

  const GeometricJacobian j_base = geometric_jacobian(chain, q, chain.camera_frame());
  GeometricJacobian j_cam(6, j_base.cols());
  const Eigen::Matrix3d rt = camera.rotation.transpose();
  j_cam.topRows<3>() = rt * j_base.topRows<3>();
  j_cam.bottomRows<3>() = rt * j_base.bottomRows<3>();

  VisualTask task;
  task.jacobian = interaction_matrix(proj.pixel, proj.depth, intrinsics) * j_cam;
  task.error = Eigen::Vector2d(proj.pixel.u - intrinsics.cu, proj.pixel.v - intrinsics.cv);
  task.pixel = proj.pixel;
  task.depth = proj.depth;
  return task;
}

}  // namespace rcmhqp
