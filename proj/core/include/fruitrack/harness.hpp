#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fruitrack/dataset.hpp"
#include "fruitrack/detect3d.hpp"
#include "fruitrack/simulator.hpp"
#include "fruitrack/tracker.hpp"
#include "fruitrack/yield.hpp"

namespace fruitrack::harness {

// ---------------------------------------------------------------------------
// Detection + tracking over a frame stream

struct PipelineResult {
  tracker::TrackStore store;
  detect3d::RejectionStats rejections;
  long frames = 0;
  long boxes = 0;         // 2D boxes fed in
  long detections = 0;    // 3D detections produced
  long skipped_frames = 0;
  long dropped_boxes = 0;
};

/// Runs detect3d and the tracker over every synchronized frame of a dataset.
PipelineResult run_tracking(const dataset::Dataset& ds, const tracker::TrackerConfig& config);

/// Same pipeline, rendering simulated frames in memory instead of reading them.
PipelineResult run_tracking(const sim::Simulation& sim, const tracker::TrackerConfig& config);

// ---------------------------------------------------------------------------
// Ground-truth matching and metrics

struct MatchPair {
  long track_id = 0;
  long fruit_id = 0;
  double error = 0.0;  // center distance, meters
};

struct MatchResult {
  std::vector<MatchPair> pairs;  // ascending error
  std::vector<long> unmatched_tracks;
  std::vector<long> unmatched_fruits;
  /// Unmatched tracks whose nearest fruit, within duplicate_radius, is matched.
  std::vector<long> duplicate_tracks;
  double radius = 0.02;
};

inline constexpr double kDefaultMatchRadius = 0.02;
inline constexpr double kDefaultDuplicateRadius = 0.2;

/// Greedy one-to-one matching by ascending distance, cut off at radius.
/// Distance ties are broken by (track id, fruit id), so the result does not
/// depend on input order.
MatchResult match_to_ground_truth(std::span<const tracker::Track> tracks,
                                  std::span<const dataset::GroundTruthFruit> fruits,
                                  double radius = kDefaultMatchRadius,
                                  double duplicate_radius = kDefaultDuplicateRadius);

/// |estimate - truth| / truth; nullopt when truth is zero.
std::optional<double> relative_error(double estimate, double truth);

struct Metrics {
  long estimated_count = 0;
  long true_count = 0;
  std::optional<double> count_error;
  std::optional<double> counting_accuracy;
  double estimated_average_weight = 0.0;
  std::optional<double> true_average_weight;
  std::optional<double> average_weight_error;
  std::optional<double> precision;
  std::optional<double> recall;
  long matched = 0;
  long duplicate_tracks = 0;
};

/// `truth` should already be restricted to what the yield step counts (see
/// counted_fruits). Ratio metrics are absent when truth is empty.
Metrics compute_metrics(const yield::YieldReport& report, std::span<const dataset::GroundTruthFruit> truth,
                        const MatchResult& match);

/// Ground-truth fruits of the target class inside the region.
std::vector<dataset::GroundTruthFruit> counted_fruits(std::span<const dataset::GroundTruthFruit> fruits,
                                                      const yield::YieldConfig& config);

/// "5.6%" style, one decimal.
std::string format_percent(double fraction);

std::string format_metrics(const Metrics& m);

// ---------------------------------------------------------------------------
// Sampled-frame reprojection check

struct FrameSampleRow {
  long frame_id = 0;
  double timestamp = 0.0;
  long ground_truth = 0;  // fruits visible in the left half of the image
  long tracks = 0;        // reliable tracks reprojecting there
};

struct FrameSampleReport {
  std::vector<FrameSampleRow> rows;
  long total_ground_truth = 0;
  long total_tracks = 0;

  /// total_tracks / total_ground_truth.
  std::optional<double> ratio() const;
};

/// A point counts when it lies in front of the camera within
/// (min_depth, max_depth] and projects to u < width/2 inside the image.
bool in_left_half(const Eigen::Vector3d& p_world, const geometry::Pose6D& pose, const geometry::CameraIntrinsics& intr);

/// Samples a frame every `interval_s` seconds, starting at the first pose.
/// max_samples = 0 means no limit.
FrameSampleReport frame_sample_report(std::span<const dataset::PoseRecord> poses,
                                      const geometry::CameraIntrinsics& intr,
                                      std::span<const dataset::GroundTruthFruit> fruits,
                                      std::span<const tracker::Track> tracks, double frame_rate, double interval_s,
                                      std::size_t max_samples = 0);

FrameSampleReport frame_sample_report(const dataset::Dataset& ds, std::span<const tracker::Track> tracks,
                                      double interval_s, std::size_t max_samples = 0);

FrameSampleReport totals_report(long ground_truth, long tracks);

// ---------------------------------------------------------------------------
// Overlay export

struct OverlayRecord {
  long frame_id = 0;
  long track_id = 0;
  double u = 0.0, v = 0.0;
  double u_min = 0.0, v_min = 0.0, u_max = 0.0, v_max = 0.0;
};

/// Projected rectangle of every track in front of the camera whose rectangle
/// overlaps the image, per pose, in (frame, track id) order.
std::vector<OverlayRecord> overlay_records(std::span<const dataset::PoseRecord> poses,
                                           const geometry::CameraIntrinsics& intr,
                                           std::span<const tracker::Track> tracks);

/// Writes overlay.jsonl into out_dir and, when `raster` is set, one PPM per
/// frame under out_dir/overlay/ with track rectangles outlined over a gray depth view.
std::vector<OverlayRecord> export_overlay(const dataset::Dataset& ds, std::span<const tracker::Track> tracks,
                                          const std::filesystem::path& out_dir, bool raster = false);

}  // namespace fruitrack::harness
