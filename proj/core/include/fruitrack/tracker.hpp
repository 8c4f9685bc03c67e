#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "fruitrack/detect3d.hpp"
#include "fruitrack/geometry.hpp"

namespace fruitrack::tracker {

struct TrackerConfig {
  double dist_max = 0.04;  // association gate on center distance, meters
  double w_p = 0.7;        // position update weight
  double w_v = 0.7;        // extent update weight
  int min_associations = 3;

  void validate() const;
};

struct ClassTally {
  long count = 0;
  long last_seq = 0;  // value of Track::n_assoc right after the latest vote

  friend bool operator==(const ClassTally&, const ClassTally&) = default;
};

struct Track {
  long id = 0;
  geometry::Cube cube;  // world frame
  std::map<int, ClassTally> class_histogram;
  long n_assoc = 1;  // the seeding detection counts
  long created_frame = 0;
  long last_matched_frame = 0;

  friend bool operator==(const Track&, const Track&) = default;
};

/// Majority class; ties go to the class voted most recently.
int track_class(const Track& track);

struct Match {
  std::size_t detection_index = 0;
  long track_id = 0;

  friend bool operator==(const Match&, const Match&) = default;
};

struct FrameReport {
  long frame_id = 0;
  std::size_t detections = 0;
  std::vector<Match> matches;
  std::vector<long> new_track_ids;
};

/// Stationary-object track store. Single writer; frames must arrive in
/// increasing frame_id order. Tracks are never deleted and ids never reused.
class TrackStore {
 public:
  explicit TrackStore(TrackerConfig config = {});

  /// Gates every detection against the tracks that existed when the frame
  /// started (nearest center within dist_max, ties to the lower id), then
  /// applies the convex updates in detection order. Unmatched detections seed
  /// new tracks, which are not candidates until the next frame.
  FrameReport process_frame(long frame_id, std::span<const detect3d::Detection3D> detections);

  /// Tracks with n_assoc >= min_associations, in id order.
  std::vector<Track> reliable_tracks() const;

  const std::vector<Track>& tracks() const { return tracks_; }
  const TrackerConfig& config() const { return config_; }
  const std::vector<FrameReport>& history() const { return history_; }
  long total_detections() const { return total_detections_; }

 private:
  TrackerConfig config_;
  std::vector<Track> tracks_;
  std::vector<FrameReport> history_;
  long next_id_ = 0;
  long total_detections_ = 0;
  std::optional<long> last_frame_;
};

}  // namespace fruitrack::tracker
