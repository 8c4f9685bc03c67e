#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fruitrack/depth_frame.hpp"
#include "fruitrack/geometry.hpp"

namespace fruitrack::detect3d {

/// A detector box lifted into the world frame.
struct Detection3D {
  geometry::Cube cube;  // world frame
  int class_id = 0;
  long frame_id = 0;
  geometry::BBox2D source;
};

/// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct PixelRect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  bool empty() const { return x1 <= x0 || y1 <= y0; }
  long area() const { return empty() ? 0 : long(x1 - x0) * long(y1 - y0); }
};

/// Pixels covered by a box, clamped to the image. Pixel i spans [i - 0.5, i + 0.5);
/// a box always covers at least one pixel column and row before clamping.
PixelRect roi_rect(const geometry::BBox2D& bbox, int width, int height);

enum class DepthRejection { none, empty_roi, invalid_median, out_of_range };

struct DepthSample {
  std::optional<double> depth;  // meters
  DepthRejection cause = DepthRejection::none;
};

/// Median of every raw ROI value (invalid zeros included), taken as element
/// floor(n/2) of the ascending sort. A zero or out-of-range median rejects.
DepthSample sample_roi_depth(const dataset::DepthFrame& depth, const geometry::BBox2D& bbox,
                             const geometry::CameraIntrinsics& intr);

std::optional<double> roi_median_depth(const dataset::DepthFrame& depth, const geometry::BBox2D& bbox,
                                       const geometry::CameraIntrinsics& intr);

struct RejectionStats {
  long empty_roi = 0;
  long invalid_median = 0;
  long out_of_range = 0;

  long total() const { return empty_roi + invalid_median + out_of_range; }
  void record(DepthRejection cause);
  RejectionStats& operator+=(const RejectionStats& o);
  friend bool operator==(const RejectionStats&, const RejectionStats&) = default;
};

/// median depth -> back_project -> to_world. Throws ContractViolation if the box
/// and depth frame disagree on frame id.
std::optional<Detection3D> make_detection(const geometry::BBox2D& bbox, const dataset::DepthFrame& depth,
                                          const geometry::CameraIntrinsics& intr,
                                          const geometry::Pose6D& pose, RejectionStats* stats = nullptr);

struct FrameDetections {
  std::vector<Detection3D> detections;  // subsequence of the input order
  RejectionStats stats;
};

FrameDetections detections_for_frame(std::span<const geometry::BBox2D> boxes, const dataset::DepthFrame& depth,
                                     const geometry::CameraIntrinsics& intr, const geometry::Pose6D& pose);

}  // namespace fruitrack::detect3d
