#include "fruitrack/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "io_util.hpp"

namespace fruitrack::harness {

using dataset::GroundTruthFruit;
using tracker::Track;

namespace {

void step(PipelineResult& r, long frame_id, const geometry::Pose6D& pose, std::span<const geometry::BBox2D> boxes,
          const dataset::DepthFrame& depth, const geometry::CameraIntrinsics& intr) {
  auto fd = detect3d::detections_for_frame(boxes, depth, intr, pose);
  r.rejections += fd.stats;
  r.boxes += long(boxes.size());
  r.detections += long(fd.detections.size());
  r.store.process_frame(frame_id, fd.detections);
  ++r.frames;
}

}  // namespace

PipelineResult run_tracking(const dataset::Dataset& ds, const tracker::TrackerConfig& config) {
  PipelineResult r;
  r.store = tracker::TrackStore(config);
  const auto seq = ds.frames();
  r.skipped_frames = seq.depth_frames_without_pose + seq.poses_without_depth;
  r.dropped_boxes = seq.detections_without_pose;
  for (const auto& f : seq.frames) step(r, f.frame_id, f.pose, f.detections, f.depth(), ds.intrinsics());
  return r;
}

PipelineResult run_tracking(const sim::Simulation& sim, const tracker::TrackerConfig& config) {
  PipelineResult r;
  r.store = tracker::TrackStore(config);
  for (std::size_t i = 0; i < sim.trajectory.size(); ++i) {
    const auto frame = sim.render(i);
    const auto& pose = sim.trajectory[i];
    step(r, pose.frame_id, pose.pose, frame.detections, frame.depth, sim.spec.camera);
  }
  return r;
}

MatchResult match_to_ground_truth(std::span<const Track> tracks, std::span<const GroundTruthFruit> fruits,
                                  double radius, double duplicate_radius) {
  struct Candidate {
    double dist;
    long track_id;
    long fruit_id;
  };
  std::vector<Candidate> candidates;
  for (const auto& t : tracks) {
    for (const auto& f : fruits) {
      const double d = (t.cube.center - f.center).norm();
      if (d <= radius) candidates.push_back({d, t.id, f.id});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    if (a.track_id != b.track_id) return a.track_id < b.track_id;
    return a.fruit_id < b.fruit_id;
  });

  MatchResult m;
  m.radius = radius;
  std::set<long> used_tracks, used_fruits;
  for (const auto& c : candidates) {
    if (used_tracks.count(c.track_id) || used_fruits.count(c.fruit_id)) continue;
    used_tracks.insert(c.track_id);
    used_fruits.insert(c.fruit_id);
    m.pairs.push_back({c.track_id, c.fruit_id, c.dist});
  }

  for (const auto& t : tracks) {
    if (used_tracks.count(t.id)) continue;
    m.unmatched_tracks.push_back(t.id);
    const GroundTruthFruit* nearest = nullptr;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& f : fruits) {
      const double d = (t.cube.center - f.center).norm();
      if (d < best || (d == best && nearest && f.id < nearest->id)) {
        best = d;
        nearest = &f;
      }
    }
    if (nearest && best <= duplicate_radius && used_fruits.count(nearest->id)) m.duplicate_tracks.push_back(t.id);
  }
  for (const auto& f : fruits) {
    if (!used_fruits.count(f.id)) m.unmatched_fruits.push_back(f.id);
  }
  std::sort(m.unmatched_tracks.begin(), m.unmatched_tracks.end());
  std::sort(m.duplicate_tracks.begin(), m.duplicate_tracks.end());
  std::sort(m.unmatched_fruits.begin(), m.unmatched_fruits.end());
  return m;
}

std::optional<double> relative_error(double estimate, double truth) {
  if (truth == 0.0) return std::nullopt;
  return std::abs(estimate - truth) / std::abs(truth);
}

Metrics compute_metrics(const yield::YieldReport& report, std::span<const GroundTruthFruit> truth,
                        const MatchResult& match) {
  Metrics m;
  m.estimated_count = report.count;
  m.true_count = long(truth.size());
  m.estimated_average_weight = report.average_weight_g;
  m.matched = long(match.pairs.size());
  m.duplicate_tracks = long(match.duplicate_tracks.size());

  if (!truth.empty()) {
    m.count_error = relative_error(double(m.estimated_count), double(m.true_count));
    m.counting_accuracy = 1.0 - *m.count_error;
    const bool all_weighed = std::all_of(truth.begin(), truth.end(), [](const auto& f) { return f.weight.has_value(); });
    if (all_weighed) {
      double total = 0.0;
      for (const auto& f : truth) total += *f.weight;
      m.true_average_weight = total / double(truth.size());
      m.average_weight_error = relative_error(m.estimated_average_weight, *m.true_average_weight);
    }
    m.recall = double(m.matched) / double(truth.size());
  }
  const long tracks = long(match.pairs.size() + match.unmatched_tracks.size());
  if (tracks > 0) m.precision = double(m.matched) / double(tracks);
  return m;
}

std::vector<GroundTruthFruit> counted_fruits(std::span<const GroundTruthFruit> fruits, const yield::YieldConfig& config) {
  std::vector<GroundTruthFruit> out;
  for (const auto& f : fruits) {
    if (config.target_class && f.class_id != *config.target_class) continue;
    if (!config.region.contains(f.center)) continue;
    out.push_back(f);
  }
  return out;
}

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", fraction * 100.0);
  return buf;
}

std::string format_metrics(const Metrics& m) {
  auto opt = [](const std::optional<double>& v) { return v ? format_percent(*v) : std::string("n/a"); };
  std::ostringstream os;
  char avg[64];
  os << "estimated count:      " << m.estimated_count << "\n";
  os << "true count:           " << m.true_count << "\n";
  os << "counting accuracy:    " << opt(m.counting_accuracy) << "\n";
  os << "count error:          " << opt(m.count_error) << "\n";
  std::snprintf(avg, sizeof avg, "%.2f g", m.estimated_average_weight);
  os << "avg weight (est):     " << avg << "\n";
  if (m.true_average_weight) {
    std::snprintf(avg, sizeof avg, "%.2f g", *m.true_average_weight);
    os << "avg weight (true):    " << avg << "\n";
  }
  os << "avg weight error:     " << opt(m.average_weight_error) << "\n";
  os << "precision:            " << opt(m.precision) << "\n";
  os << "recall:               " << opt(m.recall) << "\n";
  os << "duplicate tracks:     " << m.duplicate_tracks << "\n";
  return os.str();
}

std::optional<double> FrameSampleReport::ratio() const {
  if (total_ground_truth == 0) return std::nullopt;
  return double(total_tracks) / double(total_ground_truth);
}

FrameSampleReport totals_report(long ground_truth, long tracks) {
  FrameSampleReport r;
  r.total_ground_truth = ground_truth;
  r.total_tracks = tracks;
  return r;
}

bool in_left_half(const Eigen::Vector3d& p_world, const geometry::Pose6D& pose, const geometry::CameraIntrinsics& intr) {
  const double z = pose.to_camera(p_world).z();
  if (!(z > intr.min_depth && z <= intr.max_depth)) return false;
  const auto px = geometry::project_point(p_world, pose, intr);
  return px && px->x() >= 0.0 && px->x() < intr.width / 2.0 && px->y() >= 0.0 && px->y() < intr.height;
}

FrameSampleReport frame_sample_report(std::span<const dataset::PoseRecord> poses,
                                      const geometry::CameraIntrinsics& intr,
                                      std::span<const GroundTruthFruit> fruits, std::span<const Track> tracks,
                                      double frame_rate, double interval_s, std::size_t max_samples) {
  FrameSampleReport r;
  if (poses.empty()) return r;
  const std::size_t stride = std::size_t(std::max(1L, std::lround(interval_s * frame_rate)));
  for (std::size_t i = 0; i < poses.size(); i += stride) {
    if (max_samples && r.rows.size() >= max_samples) break;
    const auto& pose = poses[i];
    FrameSampleRow row;
    row.frame_id = pose.frame_id;
    row.timestamp = pose.timestamp;
    for (const auto& f : fruits) row.ground_truth += in_left_half(f.center, pose.pose, intr);
    for (const auto& t : tracks) row.tracks += in_left_half(t.cube.center, pose.pose, intr);
    r.total_ground_truth += row.ground_truth;
    r.total_tracks += row.tracks;
    r.rows.push_back(row);
  }
  return r;
}

FrameSampleReport frame_sample_report(const dataset::Dataset& ds, std::span<const Track> tracks, double interval_s,
                                      std::size_t max_samples) {
  static const std::vector<GroundTruthFruit> kNone;
  const auto& gt = ds.ground_truth() ? *ds.ground_truth() : kNone;
  return frame_sample_report(ds.poses(), ds.intrinsics(), gt, tracks, ds.manifest().frame_rate, interval_s,
                             max_samples);
}

std::vector<OverlayRecord> overlay_records(std::span<const dataset::PoseRecord> poses,
                                           const geometry::CameraIntrinsics& intr, std::span<const Track> tracks) {
  std::vector<const Track*> ordered;
  for (const auto& t : tracks) ordered.push_back(&t);
  std::sort(ordered.begin(), ordered.end(), [](const Track* a, const Track* b) { return a->id < b->id; });

  std::vector<OverlayRecord> out;
  for (const auto& pose : poses) {
    for (const Track* t : ordered) {
      const Eigen::Vector3d p = pose.pose.to_camera(t->cube.center);
      if (!(p.z() > 0.0)) continue;
      OverlayRecord r;
      r.frame_id = pose.frame_id;
      r.track_id = t->id;
      r.u = intr.fx * p.x() / p.z() + intr.cx;
      r.v = intr.fy * p.y() / p.z() + intr.cy;
      const double hu = intr.fx * t->cube.w() / (2.0 * p.z());
      const double hv = intr.fy * t->cube.h() / (2.0 * p.z());
      r.u_min = r.u - hu;
      r.u_max = r.u + hu;
      r.v_min = r.v - hv;
      r.v_max = r.v + hv;
      if (r.u_max <= 0.0 || r.u_min >= intr.width || r.v_max <= 0.0 || r.v_min >= intr.height) continue;
      out.push_back(r);
    }
  }
  return out;
}

namespace {

void write_raster(const dataset::DepthFrame& depth, const geometry::CameraIntrinsics& intr,
                  std::span<const OverlayRecord> records, const std::filesystem::path& path) {
  const int w = depth.width, h = depth.height;
  std::string header = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  std::string img(std::size_t(w) * h * 3, '\0');
  const double max_units = intr.max_depth / intr.depth_scale;
  for (std::size_t i = 0; i < depth.values.size(); ++i) {
    const std::uint16_t d = depth.values[i];
    const unsigned char g = d == 0 ? 0 : static_cast<unsigned char>(255 - std::min(200.0, 200.0 * d / max_units));
    img[3 * i] = img[3 * i + 1] = img[3 * i + 2] = static_cast<char>(g);
  }
  auto put = [&](int x, int y, unsigned char r, unsigned char g, unsigned char b) {
    if (x < 0 || y < 0 || x >= w || y >= h) return;
    const std::size_t i = (std::size_t(y) * w + x) * 3;
    img[i] = char(r);
    img[i + 1] = char(g);
    img[i + 2] = char(b);
  };
  for (const auto& rec : records) {
    const unsigned char r = static_cast<unsigned char>(64 + (rec.track_id * 97) % 192);
    const unsigned char g = static_cast<unsigned char>(64 + (rec.track_id * 57) % 192);
    const unsigned char b = static_cast<unsigned char>(64 + (rec.track_id * 31) % 192);
    const int x0 = int(std::floor(rec.u_min)), x1 = int(std::ceil(rec.u_max));
    const int y0 = int(std::floor(rec.v_min)), y1 = int(std::ceil(rec.v_max));
    for (int x = x0; x <= x1; ++x) {
      put(x, y0, r, g, b);
      put(x, y1, r, g, b);
    }
    for (int y = y0; y <= y1; ++y) {
      put(x0, y, r, g, b);
      put(x1, y, r, g, b);
    }
  }
  io::atomic_write(path, header + img);
}

}  // namespace

std::vector<OverlayRecord> export_overlay(const dataset::Dataset& ds, std::span<const Track> tracks,
                                          const std::filesystem::path& out_dir, bool raster) {
  const auto records = overlay_records(ds.poses(), ds.intrinsics(), tracks);
  std::string text;
  for (const auto& r : records) {
    io::Json j{{"frame_id", r.frame_id}, {"track_id", r.track_id}, {"u", r.u},         {"v", r.v},
               {"u_min", r.u_min},       {"v_min", r.v_min},       {"u_max", r.u_max}, {"v_max", r.v_max}};
    text += j.dump();
    text += '\n';
  }
  io::atomic_write(out_dir / "overlay.jsonl", text);

  if (raster) {
    std::map<long, std::vector<OverlayRecord>> by_frame;
    for (const auto& r : records) by_frame[r.frame_id].push_back(r);
    for (const auto& f : ds.frames().frames) {
      char name[32];
      std::snprintf(name, sizeof name, "%06ld.ppm", f.frame_id);
      const auto it = by_frame.find(f.frame_id);
      const std::span<const OverlayRecord> recs =
          it == by_frame.end() ? std::span<const OverlayRecord>{} : std::span<const OverlayRecord>(it->second);
      write_raster(f.depth(), ds.intrinsics(), recs, out_dir / "overlay" / name);
    }
  }
  return records;
}

}  // namespace fruitrack::harness
