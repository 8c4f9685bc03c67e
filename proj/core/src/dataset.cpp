#include "fruitrack/dataset.hpp"

#include <algorithm>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "fruitrack/errors.hpp"
#include "io_util.hpp"

namespace fruitrack::dataset {

using io::Json;
using io::get_field;

namespace {

Json vec3(const Eigen::Vector3d& v) { return Json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d vec3_field(const Json& j, const char* key, const std::string& where) {
  const auto a = get_field<std::vector<double>>(j, key, where);
  if (a.size() != 3) io::fail(where, std::string("field '") + key + "' must have 3 elements");
  return {a[0], a[1], a[2]};
}

std::string join_lines(const std::vector<Json>& records) {
  std::string out;
  for (const auto& r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

Json pose_json(const PoseRecord& p) {
  const auto& q = p.pose.rotation();
  return Json{{"frame_id", p.frame_id},
              {"timestamp", p.timestamp},
              {"translation", vec3(p.pose.translation())},
              {"rotation", Json::array({q.w(), q.x(), q.y(), q.z()})}};
}

Json detection_json(const DetectionRecord& d) {
  return Json{{"frame_id", d.frame_id}, {"u", d.u},   {"v", d.v},
              {"du", d.du},             {"dv", d.dv}, {"class_id", d.class_id},
              {"confidence", d.confidence}};
}

Json track_json(const tracker::Track& t) {
  Json hist = Json::array();
  for (const auto& [cls, tally] : t.class_histogram) hist.push_back(Json::array({cls, tally.count, tally.last_seq}));
  return Json{{"id", t.id},
              {"center", vec3(t.cube.center)},
              {"extents", vec3(t.cube.extents)},
              {"class_id", tracker::track_class(t)},
              {"n_assoc", t.n_assoc},
              {"created_frame", t.created_frame},
              {"last_matched_frame", t.last_matched_frame},
              {"class_histogram", hist}};
}

void require_exists(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw DataError(what + " not found: " + p.string());
}

}  // namespace

std::string depth_file_name(long frame_id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06ld.pgm", frame_id);
  return buf;
}

DepthFrame FrameView::depth() const {
  DepthFrame d = read_depth_pgm(depth_path);
  d.frame_id = frame_id;
  return d;
}

// ---------------------------------------------------------------------------
// Writers

void write_intrinsics(const geometry::CameraIntrinsics& intr, const fs::path& path) {
  Json j{{"fx", intr.fx},
         {"fy", intr.fy},
         {"cx", intr.cx},
         {"cy", intr.cy},
         {"width", intr.width},
         {"height", intr.height},
         {"depth_scale", intr.depth_scale},
         {"min_depth", intr.min_depth},
         {"max_depth", intr.max_depth}};
  io::atomic_write(path, j.dump(2) + "\n");
}

void write_poses(const std::vector<PoseRecord>& poses, const fs::path& path) {
  std::vector<Json> records;
  records.reserve(poses.size());
  for (const auto& p : poses) records.push_back(pose_json(p));
  io::atomic_write(path, join_lines(records));
}

void write_detections(const std::vector<DetectionRecord>& dets, const fs::path& path) {
  std::vector<Json> records;
  records.reserve(dets.size());
  for (const auto& d : dets) records.push_back(detection_json(d));
  io::atomic_write(path, join_lines(records));
}

void write_ground_truth(const std::vector<GroundTruthFruit>& fruits, const fs::path& path) {
  Json arr = Json::array();
  for (const auto& f : fruits) {
    Json j{{"id", f.id}, {"center", vec3(f.center)}, {"diameter", f.diameter}, {"class_id", f.class_id}};
    if (f.weight) j["weight"] = *f.weight;
    arr.push_back(std::move(j));
  }
  io::atomic_write(path, Json{{"fruits", arr}}.dump(2) + "\n");
}

void write_manifest(const DatasetManifest& m, const fs::path& path) {
  Json j{{"format_version", 1},
         {"intrinsics", m.intrinsics},
         {"poses", m.poses},
         {"detections", m.detections},
         {"depth_dir", m.depth_dir}};
  if (m.ground_truth) j["ground_truth"] = *m.ground_truth;
  j["frame_count"] = m.frame_count;
  j["frame_rate"] = m.frame_rate;
  j["depth_scale"] = m.depth_scale;
  io::atomic_write(path, j.dump(2) + "\n");
}

void write_tracks(const std::vector<tracker::Track>& tracks, const fs::path& path) {
  std::vector<Json> records;
  records.reserve(tracks.size());
  for (const auto& t : tracks) records.push_back(track_json(t));
  io::atomic_write(path, join_lines(records));
}

void write_yield_report(const yield::YieldReport& r, const fs::path& path) {
  Json entries = Json::array();
  for (const auto& e : r.entries)
    entries.push_back(Json{{"track_id", e.track_id}, {"height_mm", e.height_mm}, {"weight_g", e.weight_g}});
  Json j{{"count", r.count},
         {"total_weight_g", r.total_weight_g},
         {"average_weight_g", r.average_weight_g},
         {"weight_model", yield::to_string(r.model)},
         {"rejected", Json{{"region", r.rejected.region},
                           {"volume", r.rejected.volume},
                           {"class", r.rejected.class_mismatch}}},
         {"entries", entries}};
  io::atomic_write(path, j.dump(2) + "\n");
}

void write_dataset(const DatasetContents& c, const fs::path& root) {
  fs::create_directories(root / c.manifest.depth_dir);
  write_intrinsics(c.intrinsics, root / c.manifest.intrinsics);
  write_poses(c.poses, root / c.manifest.poses);
  write_detections(c.detections, root / c.manifest.detections);
  for (const auto& d : c.depth_frames) write_depth_pgm(d, root / c.manifest.depth_dir / depth_file_name(d.frame_id));
  if (c.manifest.ground_truth) {
    if (!c.ground_truth) throw ContractViolation("manifest names a ground truth file but none was supplied");
    write_ground_truth(*c.ground_truth, root / *c.manifest.ground_truth);
  }
  // Manifest last: its presence marks a complete dataset.
  write_manifest(c.manifest, root / "manifest.json");
}

// ---------------------------------------------------------------------------
// Readers

geometry::CameraIntrinsics read_intrinsics(const fs::path& path) {
  const Json j = io::parse_json_file(path);
  const std::string where = path.string();
  geometry::CameraIntrinsics intr;
  intr.fx = get_field<double>(j, "fx", where);
  intr.fy = get_field<double>(j, "fy", where);
  intr.cx = get_field<double>(j, "cx", where);
  intr.cy = get_field<double>(j, "cy", where);
  intr.width = get_field<int>(j, "width", where);
  intr.height = get_field<int>(j, "height", where);
  intr.depth_scale = get_field<double>(j, "depth_scale", where);
  intr.min_depth = get_field<double>(j, "min_depth", where);
  intr.max_depth = get_field<double>(j, "max_depth", where);
  try {
    intr.validate();
  } catch (const ConfigError& e) {
    io::fail(where, e.what());
  }
  return intr;
}

std::vector<PoseRecord> read_poses(const fs::path& path) {
  std::vector<PoseRecord> out;
  io::for_each_json_line(path, [&](const Json& j, const std::string& where) {
    PoseRecord r;
    r.frame_id = get_field<long>(j, "frame_id", where);
    r.timestamp = get_field<double>(j, "timestamp", where);
    const Eigen::Vector3d t = vec3_field(j, "translation", where);
    const auto q = get_field<std::vector<double>>(j, "rotation", where);
    if (q.size() != 4) io::fail(where, "field 'rotation' must be [w, x, y, z]");
    try {
      r.pose = geometry::Pose6D(t, Eigen::Quaterniond(q[0], q[1], q[2], q[3]));
    } catch (const ConfigError& e) {
      io::fail(where, e.what());
    }
    if (!out.empty() && r.frame_id <= out.back().frame_id) io::fail(where, "frame_id not strictly increasing");
    out.push_back(r);
  });
  return out;
}

std::vector<DetectionRecord> read_detections(const fs::path& path) {
  std::vector<DetectionRecord> out;
  io::for_each_json_line(path, [&](const Json& j, const std::string& where) {
    DetectionRecord d;
    d.frame_id = get_field<long>(j, "frame_id", where);
    d.u = get_field<double>(j, "u", where);
    d.v = get_field<double>(j, "v", where);
    d.du = get_field<double>(j, "du", where);
    d.dv = get_field<double>(j, "dv", where);
    d.class_id = get_field<int>(j, "class_id", where);
    d.confidence = get_field<double>(j, "confidence", where);
    if (!(d.du > 0.0 && d.dv > 0.0)) io::fail(where, "box width and height must be positive");
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) io::fail(where, "confidence outside [0, 1]");
    out.push_back(d);
  });
  return out;
}

std::vector<GroundTruthFruit> read_ground_truth(const fs::path& path) {
  const Json j = io::parse_json_file(path);
  const std::string where = path.string();
  const auto it = j.find("fruits");
  if (it == j.end() || !it->is_array()) io::fail(where, "missing 'fruits' array");
  std::vector<GroundTruthFruit> out;
  std::size_t index = 0;
  for (const auto& f : *it) {
    const std::string w = where + ": fruits[" + std::to_string(index++) + "]";
    GroundTruthFruit g;
    g.id = get_field<long>(f, "id", w);
    g.center = vec3_field(f, "center", w);
    g.diameter = get_field<double>(f, "diameter", w);
    g.class_id = get_field<int>(f, "class_id", w);
    if (f.contains("weight")) g.weight = get_field<double>(f, "weight", w);
    if (!(g.diameter > 0.0)) io::fail(w, "diameter must be positive");
    out.push_back(g);
  }
  return out;
}

DatasetManifest read_manifest(const fs::path& path) {
  const Json j = io::parse_json_file(path);
  const std::string where = path.string();
  DatasetManifest m;
  m.intrinsics = get_field<std::string>(j, "intrinsics", where);
  m.poses = get_field<std::string>(j, "poses", where);
  m.detections = get_field<std::string>(j, "detections", where);
  m.depth_dir = get_field<std::string>(j, "depth_dir", where);
  if (j.contains("ground_truth")) m.ground_truth = get_field<std::string>(j, "ground_truth", where);
  m.frame_count = get_field<long>(j, "frame_count", where);
  m.frame_rate = get_field<double>(j, "frame_rate", where);
  if (j.contains("depth_scale")) m.depth_scale = get_field<double>(j, "depth_scale", where);
  if (m.frame_count < 0) io::fail(where, "frame_count must be non-negative");
  if (!(m.frame_rate > 0.0)) io::fail(where, "frame_rate must be positive");
  if (!(m.depth_scale > 0.0)) io::fail(where, "depth_scale must be positive");
  return m;
}

std::vector<tracker::Track> read_tracks(const fs::path& path) {
  std::vector<tracker::Track> out;
  io::for_each_json_line(path, [&](const Json& j, const std::string& where) {
    tracker::Track t;
    t.id = get_field<long>(j, "id", where);
    t.cube.center = vec3_field(j, "center", where);
    t.cube.extents = vec3_field(j, "extents", where);
    t.cube.frame = geometry::Frame::world;
    t.n_assoc = get_field<long>(j, "n_assoc", where);
    t.created_frame = get_field<long>(j, "created_frame", where);
    t.last_matched_frame = get_field<long>(j, "last_matched_frame", where);
    if (j.contains("class_histogram")) {
      for (const auto& e : get_field<std::vector<std::vector<long>>>(j, "class_histogram", where)) {
        if (e.size() != 3) io::fail(where, "class_histogram entries are [class, count, last_seq]");
        t.class_histogram[int(e[0])] = {e[1], e[2]};
      }
    } else {
      t.class_histogram[get_field<int>(j, "class_id", where)] = {t.n_assoc, t.n_assoc};
    }
    if (t.n_assoc < 1) io::fail(where, "n_assoc must be at least 1");
    if (!(t.cube.extents.array() > 0.0).all()) io::fail(where, "extents must be positive");
    out.push_back(std::move(t));
  });
  return out;
}

yield::YieldReport read_yield_report(const fs::path& path) {
  const Json j = io::parse_json_file(path);
  const std::string where = path.string();
  yield::YieldReport r;
  r.count = get_field<long>(j, "count", where);
  r.total_weight_g = get_field<double>(j, "total_weight_g", where);
  r.average_weight_g = get_field<double>(j, "average_weight_g", where);
  try {
    r.model = yield::provenance_from_string(get_field<std::string>(j, "weight_model", where));
  } catch (const ConfigError& e) {
    io::fail(where, e.what());
  }
  const Json rej = get_field<Json>(j, "rejected", where);
  r.rejected.region = get_field<long>(rej, "region", where);
  r.rejected.volume = get_field<long>(rej, "volume", where);
  r.rejected.class_mismatch = get_field<long>(rej, "class", where);
  for (const auto& e : get_field<Json>(j, "entries", where)) {
    r.entries.push_back({get_field<long>(e, "track_id", where), get_field<double>(e, "height_mm", where),
                         get_field<double>(e, "weight_g", where)});
  }
  if (r.count != long(r.entries.size())) io::fail(where, "count does not match the number of entries");
  return r;
}

// ---------------------------------------------------------------------------
// Dataset

Dataset Dataset::load(const fs::path& root) {
  Dataset ds;
  ds.root_ = root;
  const fs::path manifest_path = root / "manifest.json";
  require_exists(manifest_path, "manifest");
  ds.manifest_ = read_manifest(manifest_path);
  const auto& m = ds.manifest_;

  require_exists(root / m.intrinsics, "intrinsics file");
  require_exists(root / m.poses, "poses file");
  require_exists(root / m.detections, "detections file");
  require_exists(root / m.depth_dir, "depth directory");
  if (!fs::is_directory(root / m.depth_dir)) throw DataError("depth path is not a directory: " + (root / m.depth_dir).string());
  if (m.ground_truth) require_exists(root / *m.ground_truth, "ground truth file");

  ds.intrinsics_ = read_intrinsics(root / m.intrinsics);
  if (ds.intrinsics_.depth_scale != m.depth_scale) {
    throw DataError(manifest_path.string() + ": depth_scale disagrees with " + m.intrinsics);
  }
  ds.poses_ = read_poses(root / m.poses);
  ds.detections_ = read_detections(root / m.detections);
  if (m.ground_truth) ds.ground_truth_ = read_ground_truth(root / *m.ground_truth);
  return ds;
}

fs::path Dataset::depth_path(long frame_id) const { return root_ / manifest_.depth_dir / depth_file_name(frame_id); }

DepthFrame Dataset::depth(long frame_id) const {
  DepthFrame d = read_depth_pgm(depth_path(frame_id));
  if (d.width != intrinsics_.width || d.height != intrinsics_.height) {
    throw DataError(depth_path(frame_id).string() + ": size does not match intrinsics");
  }
  d.frame_id = frame_id;
  return d;
}

FrameSequence Dataset::frames() const {
  FrameSequence seq;

  std::set<long> depth_ids;
  static const std::regex depth_name(R"((\d+)\.pgm)");
  for (const auto& entry : fs::directory_iterator(root_ / manifest_.depth_dir)) {
    std::smatch match;
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && std::regex_match(name, match, depth_name)) depth_ids.insert(std::stol(match[1]));
  }

  std::map<long, std::vector<geometry::BBox2D>> by_frame;
  std::set<long> pose_ids;
  for (const auto& p : poses_) pose_ids.insert(p.frame_id);
  for (const auto& d : detections_) {
    if (pose_ids.count(d.frame_id)) {
      by_frame[d.frame_id].push_back(d);
    } else {
      ++seq.detections_without_pose;
    }
  }
  for (long id : depth_ids) {
    if (!pose_ids.count(id)) ++seq.depth_frames_without_pose;
  }

  for (const auto& p : poses_) {
    if (!depth_ids.count(p.frame_id)) {
      ++seq.poses_without_depth;
      continue;
    }
    FrameView f;
    f.frame_id = p.frame_id;
    f.pose = p.pose;
    f.timestamp = p.timestamp;
    if (auto it = by_frame.find(p.frame_id); it != by_frame.end()) f.detections = it->second;
    f.depth_path = depth_path(p.frame_id);
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

}  // namespace fruitrack::dataset
