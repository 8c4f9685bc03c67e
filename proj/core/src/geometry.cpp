#include "fruitrack/geometry.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "fruitrack/errors.hpp"

namespace fruitrack::geometry {

void CameraIntrinsics::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("camera intrinsics: " + what); };
  if (!(fx > 0.0) || !(fy > 0.0)) fail("focal lengths must be positive");
  if (width <= 0 || height <= 0) fail("image size must be positive");
  if (!(cx >= 0.0 && cx < width)) fail("cx must lie in [0, width)");
  if (!(cy >= 0.0 && cy < height)) fail("cy must lie in [0, height)");
  if (!(depth_scale > 0.0)) fail("depth_scale must be positive");
  if (!(min_depth > 0.0 && min_depth < max_depth)) fail("need 0 < min_depth < max_depth");
}

Pose6D::Pose6D(const Eigen::Vector3d& translation, const Eigen::Quaterniond& rotation)
    : translation_(translation), rotation_(rotation) {
  const double n = rotation.norm();
  if (!std::isfinite(n) || std::abs(n - 1.0) > kQuaternionNormTolerance) {
    std::ostringstream os;
    os << "pose rotation is not a unit quaternion (norm " << n << ")";
    throw ConfigError(os.str());
  }
  if (!translation.allFinite()) throw ConfigError("pose translation is not finite");
  // Already-unit quaternions are left bit-for-bit alone so that write/read
  // round trips are exact.
  if (std::abs(n - 1.0) > 8 * std::numeric_limits<double>::epsilon()) rotation_.normalize();
}

Eigen::Vector3d Pose6D::to_world(const Eigen::Vector3d& p_camera) const {
  return rotation_ * p_camera + translation_;
}

Eigen::Vector3d Pose6D::to_camera(const Eigen::Vector3d& p_world) const {
  return rotation_.conjugate() * (p_world - translation_);
}

bool BBox2D::valid(const CameraIntrinsics& intr) const {
  if (!(du > 0.0) || !(dv > 0.0)) return false;
  const double u0 = u - du / 2, u1 = u + du / 2;
  const double v0 = v - dv / 2, v1 = v + dv / 2;
  return u1 > 0.0 && u0 < intr.width && v1 > 0.0 && v0 < intr.height;
}

Cube back_project(const BBox2D& bbox, double z, const CameraIntrinsics& intr) {
  if (!(z >= intr.min_depth && z <= intr.max_depth)) {
    std::ostringstream os;
    os << "depth " << z << " m outside [" << intr.min_depth << ", " << intr.max_depth << "]";
    throw DepthOutOfRange(os.str());
  }
  Cube c;
  c.frame = Frame::camera;
  c.center = {(bbox.u - intr.cx) * z / intr.fx, (bbox.v - intr.cy) * z / intr.fy, z};
  const double w = bbox.du * z / intr.fx;
  const double h = bbox.dv * z / intr.fy;
  c.extents = {w, h, (w + h) / 2};
  return c;
}

Cube to_world(const Cube& cube, const Pose6D& pose) {
  if (cube.frame != Frame::camera) throw ContractViolation("to_world expects a camera-frame cube");
  Cube out = cube;
  out.center = pose.to_world(cube.center);
  out.frame = Frame::world;
  return out;
}

std::optional<Eigen::Vector2d> project_point(const Eigen::Vector3d& p_world, const Pose6D& pose,
                                             const CameraIntrinsics& intr) {
  const Eigen::Vector3d p = pose.to_camera(p_world);
  if (!(p.z() > 0.0)) return std::nullopt;
  return Eigen::Vector2d(intr.fx * p.x() / p.z() + intr.cx, intr.fy * p.y() / p.z() + intr.cy);
}

double center_distance(const Cube& a, const Cube& b) {
  if (a.frame != b.frame) throw ContractViolation("center_distance on cubes in different frames");
  return (a.center - b.center).norm();
}

double cube_volume(const Cube& c) { return c.w() * c.h() * c.l(); }

}  // namespace fruitrack::geometry
