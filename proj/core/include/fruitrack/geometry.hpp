#pragma once

#include <optional>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace fruitrack::geometry {

/// Pinhole camera with a depth sensor sharing the same image plane.
struct CameraIntrinsics {
  double fx = 434.5;
  double fy = 434.5;
  double cx = 424.0;
  double cy = 240.0;
  int width = 848;
  int height = 480;
  double depth_scale = 0.001;  // meters per depth unit
  double min_depth = 0.07;
  double max_depth = 1.0;

  /// Throws ConfigError when any invariant is broken.
  void validate() const;
};

/// Camera-to-world rigid transform.
class Pose6D {
 public:
  Pose6D() = default;

  /// Rotation is normalized when its norm is within 1e-6 of one; otherwise
  /// ConfigError is thrown.
  Pose6D(const Eigen::Vector3d& translation, const Eigen::Quaterniond& rotation);

  static Pose6D identity() { return {}; }

  const Eigen::Vector3d& translation() const { return translation_; }
  const Eigen::Quaterniond& rotation() const { return rotation_; }

  Eigen::Vector3d to_world(const Eigen::Vector3d& p_camera) const;
  Eigen::Vector3d to_camera(const Eigen::Vector3d& p_world) const;

  friend bool operator==(const Pose6D& a, const Pose6D& b) {
    return a.translation_ == b.translation_ && a.rotation_.coeffs() == b.rotation_.coeffs();
  }

 private:
  Eigen::Vector3d translation_ = Eigen::Vector3d::Zero();
  Eigen::Quaterniond rotation_ = Eigen::Quaterniond::Identity();
};

inline constexpr double kQuaternionNormTolerance = 1e-6;

/// Axis-aligned 2D box given by center and size, as emitted by the detector.
struct BBox2D {
  double u = 0.0;
  double v = 0.0;
  double du = 0.0;
  double dv = 0.0;
  int class_id = 0;
  double confidence = 1.0;
  long frame_id = 0;

  /// du, dv > 0 and the box overlaps the image rectangle.
  bool valid(const CameraIntrinsics& intr) const;

  friend bool operator==(const BBox2D&, const BBox2D&) = default;
};

enum class Frame { camera, world };

/// Center plus (w, h, l) extents. Orientation is not tracked: a cube is
/// axis-aligned in whatever frame it lives in.
struct Cube {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d extents = Eigen::Vector3d::Ones();
  Frame frame = Frame::camera;

  double w() const { return extents.x(); }
  double h() const { return extents.y(); }
  double l() const { return extents.z(); }

  friend bool operator==(const Cube& a, const Cube& b) {
    return a.center == b.center && a.extents == b.extents && a.frame == b.frame;
  }
};

/// Pinhole back-projection of a box at depth z into a camera-frame cube.
/// L is the mean of W and H. Throws DepthOutOfRange if z is outside
/// [min_depth, max_depth].
Cube back_project(const BBox2D& bbox, double z, const CameraIntrinsics& intr);

/// Rigidly moves the center into the world frame; extents are kept as-is.
Cube to_world(const Cube& cube, const Pose6D& pose);

/// Pixel coordinates of a world point, or nullopt when it is not in front of
/// the camera.
std::optional<Eigen::Vector2d> project_point(const Eigen::Vector3d& p_world, const Pose6D& pose,
                                             const CameraIntrinsics& intr);

/// Euclidean distance between cube centers. Both cubes must share a frame.
double center_distance(const Cube& a, const Cube& b);

double cube_volume(const Cube& c);

}  // namespace fruitrack::geometry
