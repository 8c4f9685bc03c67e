#include "fruitrack/tracker.hpp"

#include <limits>

#include "fruitrack/errors.hpp"

namespace fruitrack::tracker {

namespace {

// (1 - w) * a + w * b, written so that a == b and w == 1 come out exact.
Eigen::Vector3d blend(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double w) {
  if (w == 1.0) return b;
  return a + w * (b - a);
}

}  // namespace

void TrackerConfig::validate() const {
  if (!(dist_max > 0.0)) throw ConfigError("tracker: dist_max must be positive");
  if (!(w_p > 0.0 && w_p <= 1.0)) throw ConfigError("tracker: w_p must lie in (0, 1]");
  if (!(w_v > 0.0 && w_v <= 1.0)) throw ConfigError("tracker: w_v must lie in (0, 1]");
  if (min_associations < 1) throw ConfigError("tracker: min_associations must be at least 1");
}

int track_class(const Track& track) {
  int best = 0;
  ClassTally best_tally{-1, -1};
  for (const auto& [cls, tally] : track.class_histogram) {
    if (tally.count > best_tally.count || (tally.count == best_tally.count && tally.last_seq > best_tally.last_seq)) {
      best = cls;
      best_tally = tally;
    }
  }
  return best;
}

TrackStore::TrackStore(TrackerConfig config) : config_(config) { config_.validate(); }

FrameReport TrackStore::process_frame(long frame_id, std::span<const detect3d::Detection3D> detections) {
  for (const auto& d : detections) {
    if (d.frame_id != frame_id) throw ContractViolation("process_frame: detections from mixed frames");
    if (d.cube.frame != geometry::Frame::world) throw ContractViolation("process_frame: detection not in world frame");
  }
  if (last_frame_ && frame_id <= *last_frame_) throw ContractViolation("process_frame: frames out of order");
  last_frame_ = frame_id;

  FrameReport report;
  report.frame_id = frame_id;
  report.detections = detections.size();

  // Association runs against the frame-start state of existing tracks only.
  const std::size_t existing = tracks_.size();
  std::vector<Eigen::Vector3d> snapshot;
  snapshot.reserve(existing);
  for (std::size_t i = 0; i < existing; ++i) snapshot.push_back(tracks_[i].cube.center);

  std::vector<std::optional<std::size_t>> assigned(detections.size());
  for (std::size_t d = 0; d < detections.size(); ++d) {
    const Eigen::Vector3d& c = detections[d].cube.center;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < existing; ++t) {
      const double dist = (snapshot[t] - c).norm();
      // Tracks are stored in id order, so strict < keeps the lower id on ties.
      if (dist <= config_.dist_max && dist < best) {
        best = dist;
        assigned[d] = t;
      }
    }
  }

  for (std::size_t d = 0; d < detections.size(); ++d) {
    const auto& det = detections[d];
    if (assigned[d]) {
      Track& t = tracks_[*assigned[d]];
      t.cube.center = blend(t.cube.center, det.cube.center, config_.w_p);
      t.cube.extents = blend(t.cube.extents, det.cube.extents, config_.w_v);
      ++t.n_assoc;
      auto& tally = t.class_histogram[det.class_id];
      ++tally.count;
      tally.last_seq = t.n_assoc;
      t.last_matched_frame = frame_id;
      report.matches.push_back({d, t.id});
    } else {
      Track t;
      t.id = next_id_++;
      t.cube = det.cube;
      t.n_assoc = 1;
      t.class_histogram[det.class_id] = {1, 1};
      t.created_frame = frame_id;
      t.last_matched_frame = frame_id;
      report.new_track_ids.push_back(t.id);
      tracks_.push_back(std::move(t));
    }
  }

  total_detections_ += long(detections.size());
  history_.push_back(report);
  return report;
}

std::vector<Track> TrackStore::reliable_tracks() const {
  std::vector<Track> out;
  for (const auto& t : tracks_) {
    if (t.n_assoc >= config_.min_associations) out.push_back(t);
  }
  return out;
}

}  // namespace fruitrack::tracker
