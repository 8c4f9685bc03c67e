#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fruitrack/depth_frame.hpp"
#include "fruitrack/geometry.hpp"
#include "fruitrack/tracker.hpp"
#include "fruitrack/yield.hpp"

namespace fruitrack::dataset {

namespace fs = std::filesystem;

struct PoseRecord {
  long frame_id = 0;
  geometry::Pose6D pose;
  double timestamp = 0.0;

  friend bool operator==(const PoseRecord&, const PoseRecord&) = default;
};

/// A detector box; BBox2D already carries its frame id.
using DetectionRecord = geometry::BBox2D;

struct GroundTruthFruit {
  long id = 0;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double diameter = 0.0;
  int class_id = 0;
  std::optional<double> weight;  // grams

  friend bool operator==(const GroundTruthFruit& a, const GroundTruthFruit& b) {
    return a.id == b.id && a.center == b.center && a.diameter == b.diameter &&
           a.class_id == b.class_id && a.weight == b.weight;
  }
};

struct DatasetManifest {
  std::string intrinsics = "intrinsics.json";
  std::string poses = "poses.jsonl";
  std::string detections = "detections.jsonl";
  std::string depth_dir = "depth";
  std::optional<std::string> ground_truth;
  long frame_count = 0;
  double frame_rate = 30.0;
  double depth_scale = 0.001;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// Everything needed to write a dataset directory in one go.
struct DatasetContents {
  DatasetManifest manifest;
  geometry::CameraIntrinsics intrinsics;
  std::vector<PoseRecord> poses;
  std::vector<DetectionRecord> detections;
  std::vector<DepthFrame> depth_frames;
  std::optional<std::vector<GroundTruthFruit>> ground_truth;
};

/// One synchronized frame. Depth is read from disk on demand.
struct FrameView {
  long frame_id = 0;
  geometry::Pose6D pose;
  double timestamp = 0.0;
  std::vector<geometry::BBox2D> detections;
  fs::path depth_path;

  DepthFrame depth() const;
};

struct FrameSequence {
  std::vector<FrameView> frames;
  long depth_frames_without_pose = 0;
  long detections_without_pose = 0;
  long poses_without_depth = 0;
};

std::string depth_file_name(long frame_id);

class Dataset {
 public:
  /// Parses and validates every text record under root. Throws DataError with
  /// file:line context on anything malformed or missing.
  static Dataset load(const fs::path& root);

  const fs::path& root() const { return root_; }
  const DatasetManifest& manifest() const { return manifest_; }
  const geometry::CameraIntrinsics& intrinsics() const { return intrinsics_; }
  const std::vector<PoseRecord>& poses() const { return poses_; }
  const std::vector<DetectionRecord>& detections() const { return detections_; }
  const std::optional<std::vector<GroundTruthFruit>>& ground_truth() const { return ground_truth_; }

  fs::path depth_path(long frame_id) const;
  /// Reads one depth frame. Stateless, so concurrent callers are fine.
  DepthFrame depth(long frame_id) const;

  /// Exact frame_id join of poses, detections and depth files.
  FrameSequence frames() const;

 private:
  fs::path root_;
  DatasetManifest manifest_;
  geometry::CameraIntrinsics intrinsics_;
  std::vector<PoseRecord> poses_;
  std::vector<DetectionRecord> detections_;
  std::optional<std::vector<GroundTruthFruit>> ground_truth_;
};

void write_dataset(const DatasetContents& contents, const fs::path& root);

void write_intrinsics(const geometry::CameraIntrinsics& intr, const fs::path& path);
geometry::CameraIntrinsics read_intrinsics(const fs::path& path);
void write_poses(const std::vector<PoseRecord>& poses, const fs::path& path);
std::vector<PoseRecord> read_poses(const fs::path& path);
void write_detections(const std::vector<DetectionRecord>& dets, const fs::path& path);
std::vector<DetectionRecord> read_detections(const fs::path& path);
void write_ground_truth(const std::vector<GroundTruthFruit>& fruits, const fs::path& path);
std::vector<GroundTruthFruit> read_ground_truth(const fs::path& path);
void write_manifest(const DatasetManifest& manifest, const fs::path& path);
DatasetManifest read_manifest(const fs::path& path);

/// tracks.jsonl: one line per track.
void write_tracks(const std::vector<tracker::Track>& tracks, const fs::path& path);
std::vector<tracker::Track> read_tracks(const fs::path& path);

void write_yield_report(const yield::YieldReport& report, const fs::path& path);
yield::YieldReport read_yield_report(const fs::path& path);

}  // namespace fruitrack::dataset
