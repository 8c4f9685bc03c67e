#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fruitrack/dataset.hpp"
#include "fruitrack/geometry.hpp"
#include "fruitrack/random.hpp"

namespace fruitrack::sim {

/// Fruit placement. World frame: x along the lane, y lateral (towards the
/// row), z up. Defaults describe a 13.2 m greenhouse lane.
struct SceneSpec {
  double lane_length = 13.2;
  long fruit_count = 50;
  double diameter_min = 0.028;
  double diameter_max = 0.045;
  double row_distance = 0.42;  // lateral position of the row center
  double row_depth = 0.03;     // lateral thickness of the placement band
  double height_min = 1.05;
  double height_max = 1.35;
  long cluster_size = 4;          // fruits per cluster
  double cluster_spread = 0.06;   // sigma of in-cluster offsets along x and z
  double min_separation = 0.06;   // minimum x-z distance between fruit centers
  double ripe_fraction = 1.0;

  void validate() const;
};

enum class Mounting { forward, tilted };

struct TrajectorySpec {
  double speed = 2.0;        // m/s along +x
  double frame_rate = 30.0;  // Hz
  Mounting mounting = Mounting::forward;
  double yaw_deg = 0.0;    // tilted mounting only
  double pitch_deg = 0.0;  // tilted mounting only
  double camera_height = 1.2;
  double lateral_offset = 0.0;  // camera y; the camera-to-row distance is row_distance - lateral_offset

  void validate() const;
};

/// Occluder forced onto one fruit for a run of consecutive frames.
struct OcclusionEvent {
  long fruit_id = 0;
  long first_frame = 0;
  long frame_count = 1;
};

struct NoiseSpec {
  double pixel_sigma = 1.0;
  double depth_sigma = 0.005;
  double miss_rate = 0.1;
  double false_positive_rate = 0.05;  // expected false boxes per frame
  bool false_positive_depth = false;  // give false boxes plausible depth
  double occluder_probability = 0.0;  // per visible fruit and frame
  double occluder_offset = 0.15;      // occluder sits this much nearer than the fruit, meters
  double occluder_coverage = 0.6;     // fraction of the fruit's ROI the occluder covers
  std::vector<OcclusionEvent> scripted_occlusions;

  static NoiseSpec none();
  void validate() const;
};

struct SimulationSpec {
  geometry::CameraIntrinsics camera;
  SceneSpec scene;
  TrajectorySpec trajectory;
  NoiseSpec noise;

  void validate() const;
};

std::vector<dataset::GroundTruthFruit> generate_scene(const SceneSpec& spec, std::uint64_t seed);

/// Straight constant-speed pass along +x; ceil(lane_length / speed * frame_rate) frames.
std::vector<dataset::PoseRecord> generate_trajectory(const TrajectorySpec& spec, double lane_length);

/// Camera-to-world rotation for a mounting mode.
Eigen::Quaterniond mounting_rotation(const TrajectorySpec& spec);

/// Ideal detector box for a fruit: the projection of the camera-facing square
/// of side `diameter` through the fruit center. nullopt when the fruit is
/// outside (min_depth, max_depth] or its center projects outside the image.
std::optional<geometry::BBox2D> fruit_box(const dataset::GroundTruthFruit& fruit, const geometry::Pose6D& pose,
                                          const geometry::CameraIntrinsics& intr);

struct RenderedFrame {
  std::vector<geometry::BBox2D> detections;
  dataset::DepthFrame depth;
};

/// Splat renderer. Boxes of visible fruits are filled far-to-near with the
/// noisy center depth; everything else stays invalid. Then occluders, then
/// detector noise (misses, jitter) and false positives.
RenderedFrame render_frame(const std::vector<dataset::GroundTruthFruit>& scene, const dataset::PoseRecord& pose,
                           const geometry::CameraIntrinsics& intr, const NoiseSpec& noise, Rng& rng);

/// Scene plus trajectory. Frames are rendered on demand from per-frame streams,
/// so any frame can be produced independently of the others.
struct Simulation {
  SimulationSpec spec;
  std::uint64_t seed = 0;
  std::vector<dataset::GroundTruthFruit> scene;
  std::vector<dataset::PoseRecord> trajectory;

  RenderedFrame render(std::size_t index) const;
};

Simulation simulate(const SimulationSpec& spec, std::uint64_t seed);

std::uint64_t frame_stream_seed(std::uint64_t seed, long frame_id);

/// Writes the dataset layout (manifest, intrinsics, poses, detections, depth,
/// ground truth) for already rendered frames.
void export_dataset(const std::vector<dataset::GroundTruthFruit>& scene,
                    const std::vector<dataset::PoseRecord>& trajectory, const std::vector<RenderedFrame>& frames,
                    const geometry::CameraIntrinsics& intr, double frame_rate, const std::filesystem::path& root);

/// Renders and writes frame by frame.
void export_dataset(const Simulation& sim, const std::filesystem::path& root);

}  // namespace fruitrack::sim
