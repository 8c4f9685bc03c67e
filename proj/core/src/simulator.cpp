#include "fruitrack/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fruitrack/classes.hpp"
#include "fruitrack/detect3d.hpp"
#include "fruitrack/errors.hpp"
#include "fruitrack/yield.hpp"

namespace fruitrack::sim {

using dataset::DepthFrame;
using dataset::GroundTruthFruit;
using dataset::PoseRecord;
using geometry::BBox2D;
using geometry::CameraIntrinsics;

namespace {

constexpr std::uint64_t kSceneStream = 0x5ce9e;
constexpr int kFalsePositiveAttempts = 32;
constexpr long kPlacementAttemptsPerFruit = 2000;

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

std::uint16_t quantize(double z, const CameraIntrinsics& intr) {
  const double max_units = std::floor(intr.max_depth / intr.depth_scale + 1e-9);
  const double units = std::clamp(std::round(z / intr.depth_scale), 1.0, std::min(max_units, 65535.0));
  return std::uint16_t(units);
}

void check(bool ok, const char* what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void SceneSpec::validate() const {
  check(lane_length > 0.0, "scene: lane_length must be positive");
  check(fruit_count >= 0, "scene: fruit_count must be non-negative");
  check(diameter_min > 0.0 && diameter_min <= diameter_max, "scene: need 0 < diameter_min <= diameter_max");
  check(row_depth >= 0.0, "scene: row_depth must be non-negative");
  check(height_min <= height_max, "scene: height_min must not exceed height_max");
  check(cluster_size >= 1, "scene: cluster_size must be at least 1");
  check(cluster_spread >= 0.0, "scene: cluster_spread must be non-negative");
  check(min_separation >= 0.0, "scene: min_separation must be non-negative");
  check(ripe_fraction >= 0.0 && ripe_fraction <= 1.0, "scene: ripe_fraction must lie in [0, 1]");
}

void TrajectorySpec::validate() const {
  check(speed > 0.0, "trajectory: speed must be positive");
  check(frame_rate > 0.0, "trajectory: frame_rate must be positive");
  check(std::isfinite(yaw_deg) && std::isfinite(pitch_deg), "trajectory: mounting angles must be finite");
}

NoiseSpec NoiseSpec::none() {
  NoiseSpec n;
  n.pixel_sigma = 0.0;
  n.depth_sigma = 0.0;
  n.miss_rate = 0.0;
  n.false_positive_rate = 0.0;
  n.occluder_probability = 0.0;
  return n;
}

void NoiseSpec::validate() const {
  check(pixel_sigma >= 0.0 && depth_sigma >= 0.0, "noise: sigmas must be non-negative");
  check(miss_rate >= 0.0 && miss_rate <= 1.0, "noise: miss_rate must lie in [0, 1]");
  check(false_positive_rate >= 0.0 && false_positive_rate <= 1.0, "noise: false_positive_rate must lie in [0, 1]");
  check(occluder_probability >= 0.0 && occluder_probability <= 1.0, "noise: occluder_probability must lie in [0, 1]");
  check(occluder_coverage >= 0.0 && occluder_coverage <= 1.0, "noise: occluder_coverage must lie in [0, 1]");
  check(occluder_offset >= 0.0, "noise: occluder_offset must be non-negative");
  for (const auto& e : scripted_occlusions) check(e.frame_count >= 1, "noise: occlusion frame_count must be >= 1");
}

void SimulationSpec::validate() const {
  camera.validate();
  scene.validate();
  trajectory.validate();
  noise.validate();
}

std::vector<GroundTruthFruit> generate_scene(const SceneSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(mix_seed(seed, kSceneStream));
  const auto weight = yield::WeightModel::fitted_reference();
  const double sep2 = spec.min_separation * spec.min_separation;

  std::vector<GroundTruthFruit> fruits;
  fruits.reserve(std::size_t(spec.fruit_count));

  auto fits = [&](double x, double z) {
    if (x < 0.0 || x > spec.lane_length || z < spec.height_min || z > spec.height_max) return false;
    for (const auto& f : fruits) {
      const double dx = f.center.x() - x, dz = f.center.z() - z;
      if (dx * dx + dz * dz < sep2) return false;
    }
    return true;
  };

  long budget = kPlacementAttemptsPerFruit * std::max<long>(spec.fruit_count, 1);
  while (long(fruits.size()) < spec.fruit_count) {
    const double cx = rng.uniform(0.0, spec.lane_length);
    const double cz = rng.uniform(spec.height_min, spec.height_max);
    long placed_in_cluster = 0;
    int misses = 0;
    while (placed_in_cluster < spec.cluster_size && long(fruits.size()) < spec.fruit_count && misses < 50) {
      if (--budget < 0) throw ConfigError("scene: cannot place fruits at the requested min_separation");
      // The first fruit of a cluster sits on the cluster center.
      const double x = placed_in_cluster == 0 && misses == 0 ? cx : rng.gaussian(cx, spec.cluster_spread);
      const double z = placed_in_cluster == 0 && misses == 0 ? cz : rng.gaussian(cz, spec.cluster_spread);
      if (!fits(x, z)) {
        ++misses;
        continue;
      }
      GroundTruthFruit f;
      f.id = long(fruits.size());
      f.center = {x, spec.row_distance + rng.uniform(-spec.row_depth / 2, spec.row_depth / 2), z};
      f.diameter = rng.uniform(spec.diameter_min, spec.diameter_max);
      f.class_id = rng.bernoulli(spec.ripe_fraction) ? classes::kRipe : classes::kUnripe;
      f.weight = weight(f.diameter * 1000.0);
      fruits.push_back(f);
      ++placed_in_cluster;
    }
  }
  return fruits;
}

Eigen::Quaterniond mounting_rotation(const TrajectorySpec& spec) {
  // Optical axis along +y (towards the row), image right along +x, image down along -z.
  Eigen::Matrix3d base;
  base.col(0) = Eigen::Vector3d::UnitX();
  base.col(1) = -Eigen::Vector3d::UnitZ();
  base.col(2) = Eigen::Vector3d::UnitY();
  Eigen::Quaterniond q(base);
  if (spec.mounting == Mounting::tilted) {
    const Eigen::AngleAxisd yaw(deg2rad(spec.yaw_deg), Eigen::Vector3d::UnitZ());
    const Eigen::AngleAxisd pitch(deg2rad(spec.pitch_deg), Eigen::Vector3d::UnitX());
    q = Eigen::Quaterniond(yaw) * q * Eigen::Quaterniond(pitch);
  }
  return q.normalized();
}

std::vector<PoseRecord> generate_trajectory(const TrajectorySpec& spec, double lane_length) {
  spec.validate();
  if (!(lane_length > 0.0)) throw ConfigError("trajectory: lane_length must be positive");
  // The epsilon absorbs representation error, e.g. 13.2 / 2 * 30 landing just above 198.
  const long n = std::max<long>(1, long(std::ceil(lane_length / spec.speed * spec.frame_rate - 1e-9)));
  const double step = spec.speed / spec.frame_rate;
  const Eigen::Quaterniond q = mounting_rotation(spec);
  std::vector<PoseRecord> out;
  out.reserve(std::size_t(n));
  for (long k = 0; k < n; ++k) {
    PoseRecord r;
    r.frame_id = k;
    r.timestamp = double(k) / spec.frame_rate;
    r.pose = geometry::Pose6D({double(k) * step, spec.lateral_offset, spec.camera_height}, q);
    out.push_back(r);
  }
  return out;
}

std::optional<BBox2D> fruit_box(const GroundTruthFruit& fruit, const geometry::Pose6D& pose,
                                const CameraIntrinsics& intr) {
  const Eigen::Vector3d p = pose.to_camera(fruit.center);
  if (!(p.z() > intr.min_depth && p.z() <= intr.max_depth)) return std::nullopt;
  BBox2D b;
  b.u = intr.fx * p.x() / p.z() + intr.cx;
  b.v = intr.fy * p.y() / p.z() + intr.cy;
  if (!(b.u >= 0.0 && b.u < intr.width && b.v >= 0.0 && b.v < intr.height)) return std::nullopt;
  b.du = intr.fx * fruit.diameter / p.z();
  b.dv = intr.fy * fruit.diameter / p.z();
  b.class_id = fruit.class_id;
  b.confidence = 0.9;
  return b;
}

RenderedFrame render_frame(const std::vector<GroundTruthFruit>& scene, const PoseRecord& pose,
                           const CameraIntrinsics& intr, const NoiseSpec& noise, Rng& rng) {
  struct Visible {
    std::size_t index;
    double z;
    BBox2D box;
    double depth_noise;
    double jitter_u, jitter_v;
    bool missed;
    bool occluded;
  };

  RenderedFrame out;
  out.depth = DepthFrame(pose.frame_id, intr.width, intr.height);

  std::vector<Visible> visible;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    auto box = fruit_box(scene[i], pose.pose, intr);
    if (!box) continue;
    box->frame_id = pose.frame_id;
    Visible v{i, pose.pose.to_camera(scene[i].center).z(), *box, 0, 0, 0, false, false};
    // Fixed draw order per fruit keeps streams aligned whatever the noise settings.
    v.depth_noise = rng.gaussian(0.0, noise.depth_sigma);
    v.jitter_u = rng.gaussian(0.0, noise.pixel_sigma);
    v.jitter_v = rng.gaussian(0.0, noise.pixel_sigma);
    v.missed = rng.bernoulli(noise.miss_rate);
    v.occluded = rng.bernoulli(noise.occluder_probability);
    for (const auto& e : noise.scripted_occlusions) {
      if (e.fruit_id == scene[i].id && pose.frame_id >= e.first_frame && pose.frame_id < e.first_frame + e.frame_count)
        v.occluded = true;
    }
    visible.push_back(v);
  }

  // Painter's algorithm: far to near.
  std::vector<std::size_t> order(visible.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (visible[a].z != visible[b].z) return visible[a].z > visible[b].z;
    return visible[a].index < visible[b].index;
  });
  for (std::size_t k : order) {
    const auto& v = visible[k];
    const auto roi = detect3d::roi_rect(v.box, intr.width, intr.height);
    const std::uint16_t value = quantize(v.z + v.depth_noise, intr);
    for (int y = roi.y0; y < roi.y1; ++y)
      for (int x = roi.x0; x < roi.x1; ++x) out.depth.at(x, y) = value;
  }
  for (std::size_t k : order) {
    const auto& v = visible[k];
    if (!v.occluded) continue;
    const auto roi = detect3d::roi_rect(v.box, intr.width, intr.height);
    const long covered = long(std::ceil(noise.occluder_coverage * double(roi.area()) - 1e-9));
    const std::uint16_t value = quantize(v.z - noise.occluder_offset, intr);
    long painted = 0;
    for (int y = roi.y0; y < roi.y1 && painted < covered; ++y)
      for (int x = roi.x0; x < roi.x1 && painted < covered; ++x, ++painted) out.depth.at(x, y) = value;
  }

  for (const auto& v : visible) {
    if (v.missed) continue;
    BBox2D b = v.box;
    b.u += v.jitter_u;
    b.v += v.jitter_v;
    out.detections.push_back(b);
  }

  const long fp = rng.poisson(noise.false_positive_rate);
  for (long n = 0; n < fp; ++n) {
    BBox2D b;
    b.du = rng.uniform(12.0, 24.0);
    b.dv = rng.uniform(12.0, 24.0);
    b.class_id = classes::kRipe;
    b.confidence = 0.5;
    b.frame_id = pose.frame_id;
    const double fp_depth = rng.uniform(0.3, 0.9 * intr.max_depth);
    bool placed = false;
    for (int attempt = 0; attempt < kFalsePositiveAttempts && !placed; ++attempt) {
      b.u = rng.uniform(b.du / 2, intr.width - b.du / 2);
      b.v = rng.uniform(b.dv / 2, intr.height - b.dv / 2);
      const auto roi = detect3d::roi_rect(b, intr.width, intr.height);
      long invalid = 0;
      for (int y = roi.y0; y < roi.y1; ++y)
        for (int x = roi.x0; x < roi.x1; ++x) invalid += out.depth.at(x, y) == dataset::kInvalidDepth;
      placed = 2 * invalid > roi.area();
      if (placed && noise.false_positive_depth) {
        const std::uint16_t value = quantize(fp_depth, intr);
        for (int y = roi.y0; y < roi.y1; ++y)
          for (int x = roi.x0; x < roi.x1; ++x)
            if (out.depth.at(x, y) == dataset::kInvalidDepth) out.depth.at(x, y) = value;
      }
    }
    if (placed) out.detections.push_back(b);
  }
  return out;
}

std::uint64_t frame_stream_seed(std::uint64_t seed, long frame_id) {
  return mix_seed(seed, std::uint64_t(frame_id) + 1);
}

RenderedFrame Simulation::render(std::size_t index) const {
  const auto& pose = trajectory.at(index);
  Rng rng(frame_stream_seed(seed, pose.frame_id));
  return render_frame(scene, pose, spec.camera, spec.noise, rng);
}

Simulation simulate(const SimulationSpec& spec, std::uint64_t seed) {
  spec.validate();
  Simulation sim;
  sim.spec = spec;
  sim.seed = seed;
  sim.scene = generate_scene(spec.scene, seed);
  sim.trajectory = generate_trajectory(spec.trajectory, spec.scene.lane_length);
  return sim;
}

namespace {

dataset::DatasetContents contents_for(const std::vector<GroundTruthFruit>& scene,
                                      const std::vector<PoseRecord>& trajectory, const CameraIntrinsics& intr,
                                      double frame_rate) {
  dataset::DatasetContents c;
  c.manifest.ground_truth = "ground_truth.json";
  c.manifest.frame_count = long(trajectory.size());
  c.manifest.frame_rate = frame_rate;
  c.manifest.depth_scale = intr.depth_scale;
  c.intrinsics = intr;
  c.poses = trajectory;
  c.ground_truth = scene;
  return c;
}

}  // namespace

void export_dataset(const std::vector<GroundTruthFruit>& scene, const std::vector<PoseRecord>& trajectory,
                    const std::vector<RenderedFrame>& frames, const CameraIntrinsics& intr, double frame_rate,
                    const std::filesystem::path& root) {
  if (frames.size() != trajectory.size()) throw ContractViolation("export: one rendered frame per pose required");
  auto c = contents_for(scene, trajectory, intr, frame_rate);
  for (const auto& f : frames) {
    c.detections.insert(c.detections.end(), f.detections.begin(), f.detections.end());
    c.depth_frames.push_back(f.depth);
  }
  dataset::write_dataset(c, root);
}

void export_dataset(const Simulation& sim, const std::filesystem::path& root) {
  auto c = contents_for(sim.scene, sim.trajectory, sim.spec.camera, sim.spec.trajectory.frame_rate);
  const auto depth_dir = root / c.manifest.depth_dir;
  std::filesystem::create_directories(depth_dir);
  for (std::size_t i = 0; i < sim.trajectory.size(); ++i) {
    RenderedFrame f = sim.render(i);
    c.detections.insert(c.detections.end(), f.detections.begin(), f.detections.end());
    dataset::write_depth_pgm(f.depth, depth_dir / dataset::depth_file_name(f.depth.frame_id));
  }
  dataset::write_dataset(c, root);
}

}  // namespace fruitrack::sim
