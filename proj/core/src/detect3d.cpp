#include "fruitrack/detect3d.hpp"

#include <algorithm>
#include <cmath>

#include "fruitrack/errors.hpp"

namespace fruitrack::detect3d {

using geometry::BBox2D;
using geometry::CameraIntrinsics;

PixelRect roi_rect(const BBox2D& bbox, int width, int height) {
  // Pixel i covers [i - 0.5, i + 0.5), so an edge at e starts/ends at floor(e + 0.5).
  long x0 = long(std::floor(bbox.u - bbox.du / 2 + 0.5));
  long x1 = long(std::floor(bbox.u + bbox.du / 2 + 0.5));
  long y0 = long(std::floor(bbox.v - bbox.dv / 2 + 0.5));
  long y1 = long(std::floor(bbox.v + bbox.dv / 2 + 0.5));
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  PixelRect r;
  r.x0 = int(std::clamp<long>(x0, 0, width));
  r.x1 = int(std::clamp<long>(x1, 0, width));
  r.y0 = int(std::clamp<long>(y0, 0, height));
  r.y1 = int(std::clamp<long>(y1, 0, height));
  return r;
}

DepthSample sample_roi_depth(const dataset::DepthFrame& depth, const BBox2D& bbox, const CameraIntrinsics& intr) {
  const PixelRect roi = roi_rect(bbox, depth.width, depth.height);
  if (roi.empty()) return {std::nullopt, DepthRejection::empty_roi};

  std::vector<std::uint16_t> values;
  values.reserve(std::size_t(roi.area()));
  for (int y = roi.y0; y < roi.y1; ++y)
    for (int x = roi.x0; x < roi.x1; ++x) values.push_back(depth.at(x, y));

  const auto mid = values.begin() + std::ptrdiff_t(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  const std::uint16_t raw = *mid;
  if (raw == dataset::kInvalidDepth) return {std::nullopt, DepthRejection::invalid_median};

  const double z = raw * intr.depth_scale;
  if (z < intr.min_depth || z > intr.max_depth) return {std::nullopt, DepthRejection::out_of_range};
  return {z, DepthRejection::none};
}

std::optional<double> roi_median_depth(const dataset::DepthFrame& depth, const BBox2D& bbox,
                                       const CameraIntrinsics& intr) {
  return sample_roi_depth(depth, bbox, intr).depth;
}

void RejectionStats::record(DepthRejection cause) {
  switch (cause) {
    case DepthRejection::empty_roi: ++empty_roi; break;
    case DepthRejection::invalid_median: ++invalid_median; break;
    case DepthRejection::out_of_range: ++out_of_range; break;
    case DepthRejection::none: break;
  }
}

RejectionStats& RejectionStats::operator+=(const RejectionStats& o) {
  empty_roi += o.empty_roi;
  invalid_median += o.invalid_median;
  out_of_range += o.out_of_range;
  return *this;
}

std::optional<Detection3D> make_detection(const BBox2D& bbox, const dataset::DepthFrame& depth,
                                          const CameraIntrinsics& intr, const geometry::Pose6D& pose,
                                          RejectionStats* stats) {
  if (bbox.frame_id != depth.frame_id) throw ContractViolation("detection and depth frame ids differ");
  if (depth.width != intr.width || depth.height != intr.height)
    throw ContractViolation("depth frame size does not match the intrinsics");

  const DepthSample sample = sample_roi_depth(depth, bbox, intr);
  if (!sample.depth) {
    if (stats) stats->record(sample.cause);
    return std::nullopt;
  }
  Detection3D det;
  det.cube = geometry::to_world(geometry::back_project(bbox, *sample.depth, intr), pose);
  det.class_id = bbox.class_id;
  det.frame_id = bbox.frame_id;
  det.source = bbox;
  return det;
}

FrameDetections detections_for_frame(std::span<const BBox2D> boxes, const dataset::DepthFrame& depth,
                                     const CameraIntrinsics& intr, const geometry::Pose6D& pose) {
  FrameDetections out;
  out.detections.reserve(boxes.size());
  for (const auto& b : boxes) {
    if (auto det = make_detection(b, depth, intr, pose, &out.stats)) out.detections.push_back(*det);
  }
  return out;
}

}  // namespace fruitrack::detect3d
