#include "fruitrack/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "fruitrack/errors.hpp"
#include "io_util.hpp"

namespace fruitrack::config {

using io::Json;

namespace {

/// Reads keys out of one JSON object and rejects any key nobody asked for.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(path_ + "." + key + ": wrong type");
    }
  }

  template <typename T>
  void read_optional(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    if (it->is_null()) {
      out.reset();
      return;
    }
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(path_ + "." + key + ": wrong type");
    }
  }

  const Json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const char* key) const { return path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(path_ + ": unknown key '" + it.key() + "'");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_camera(const Json& j, geometry::CameraIntrinsics& c) {
  Section s(j, "camera");
  s.read("fx", c.fx);
  s.read("fy", c.fy);
  s.read("cx", c.cx);
  s.read("cy", c.cy);
  s.read("width", c.width);
  s.read("height", c.height);
  s.read("depth_scale", c.depth_scale);
  s.read("min_depth", c.min_depth);
  s.read("max_depth", c.max_depth);
  s.finish();
}

void read_scene(const Json& j, sim::SceneSpec& c) {
  Section s(j, "scene");
  s.read("lane_length", c.lane_length);
  s.read("fruit_count", c.fruit_count);
  s.read("diameter_min", c.diameter_min);
  s.read("diameter_max", c.diameter_max);
  s.read("row_distance", c.row_distance);
  s.read("row_depth", c.row_depth);
  s.read("height_min", c.height_min);
  s.read("height_max", c.height_max);
  s.read("cluster_size", c.cluster_size);
  s.read("cluster_spread", c.cluster_spread);
  s.read("min_separation", c.min_separation);
  s.read("ripe_fraction", c.ripe_fraction);
  s.finish();
}

void read_trajectory(const Json& j, sim::TrajectorySpec& c) {
  Section s(j, "trajectory");
  s.read("speed", c.speed);
  s.read("frame_rate", c.frame_rate);
  std::string mounting = c.mounting == sim::Mounting::forward ? "forward" : "tilted";
  s.read("mounting", mounting);
  if (mounting == "forward") {
    c.mounting = sim::Mounting::forward;
  } else if (mounting == "tilted") {
    c.mounting = sim::Mounting::tilted;
  } else {
    throw ConfigError("trajectory.mounting: expected forward or tilted");
  }
  s.read("yaw_deg", c.yaw_deg);
  s.read("pitch_deg", c.pitch_deg);
  s.read("camera_height", c.camera_height);
  s.read("lateral_offset", c.lateral_offset);
  s.finish();
}

void read_noise(const Json& j, sim::NoiseSpec& c) {
  Section s(j, "noise");
  s.read("pixel_sigma", c.pixel_sigma);
  s.read("depth_sigma", c.depth_sigma);
  s.read("miss_rate", c.miss_rate);
  s.read("false_positive_rate", c.false_positive_rate);
  s.read("false_positive_depth", c.false_positive_depth);
  s.read("occluder_probability", c.occluder_probability);
  s.read("occluder_offset", c.occluder_offset);
  s.read("occluder_coverage", c.occluder_coverage);
  if (const Json* events = s.child("scripted_occlusions")) {
    if (!events->is_array()) throw ConfigError("noise.scripted_occlusions: expected an array");
    c.scripted_occlusions.clear();
    for (const auto& e : *events) {
      Section es(e, "noise.scripted_occlusions[]");
      sim::OcclusionEvent ev;
      es.read("fruit_id", ev.fruit_id);
      es.read("first_frame", ev.first_frame);
      es.read("frame_count", ev.frame_count);
      es.finish();
      c.scripted_occlusions.push_back(ev);
    }
  }
  s.finish();
}

void read_tracker(const Json& j, tracker::TrackerConfig& c) {
  Section s(j, "tracker");
  s.read("dist_max", c.dist_max);
  s.read("w_p", c.w_p);
  s.read("w_v", c.w_v);
  s.read("min_associations", c.min_associations);
  s.finish();
}

void read_yield(const Json& j, yield::YieldConfig& c) {
  Section s(j, "yield");
  s.read("min_volume", c.min_volume);
  s.read_optional("target_class", c.target_class);
  std::string model = yield::to_string(c.model.provenance);
  s.read("weight_model", model);
  c.model = yield::WeightModel::by_name(model);
  if (const Json* region = s.child("region")) {
    Section rs(*region, "yield.region");
    const char* names[3] = {"x", "y", "z"};
    for (int i = 0; i < 3; ++i) {
      if (const Json* axis = rs.child(names[i])) {
        Section as(*axis, rs.path(names[i]));
        as.read_optional("min", c.region.axes[i].min);
        as.read_optional("max", c.region.axes[i].max);
        as.finish();
      }
    }
    rs.finish();
  }
  s.finish();
}

void read_eval(const Json& j, EvalConfig& c) {
  Section s(j, "eval");
  s.read("match_radius", c.match_radius);
  s.read("duplicate_radius", c.duplicate_radius);
  s.read("sample_interval", c.sample_interval);
  s.read("max_samples", c.max_samples);
  s.read("raster_overlay", c.raster_overlay);
  s.finish();
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

void EvalConfig::validate() const {
  if (!(match_radius > 0.0)) throw ConfigError("eval: match_radius must be positive");
  if (!(duplicate_radius >= 0.0)) throw ConfigError("eval: duplicate_radius must be non-negative");
  if (!(sample_interval > 0.0)) throw ConfigError("eval: sample_interval must be positive");
}

void AppConfig::validate() const {
  simulation.validate();
  tracker.validate();
  yield.validate();
  eval.validate();
}

AppConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  AppConfig c;
  Section root(j, "config");
  if (const Json* v = root.child("camera")) read_camera(*v, c.simulation.camera);
  if (const Json* v = root.child("scene")) read_scene(*v, c.simulation.scene);
  if (const Json* v = root.child("trajectory")) read_trajectory(*v, c.simulation.trajectory);
  if (const Json* v = root.child("noise")) read_noise(*v, c.simulation.noise);
  if (const Json* v = root.child("tracker")) read_tracker(*v, c.tracker);
  if (const Json* v = root.child("yield")) read_yield(*v, c.yield);
  if (const Json* v = root.child("eval")) read_eval(*v, c.eval);
  root.finish();
  c.validate();
  return c;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string dump_config(const AppConfig& c) {
  const auto& cam = c.simulation.camera;
  const auto& sc = c.simulation.scene;
  const auto& tr = c.simulation.trajectory;
  const auto& n = c.simulation.noise;
  Json occl = Json::array();
  for (const auto& e : n.scripted_occlusions)
    occl.push_back(Json{{"fruit_id", e.fruit_id}, {"first_frame", e.first_frame}, {"frame_count", e.frame_count}});
  Json region = Json::object();
  const char* names[3] = {"x", "y", "z"};
  for (int i = 0; i < 3; ++i)
    region[names[i]] = Json{{"min", optional_json(c.yield.region.axes[i].min)},
                            {"max", optional_json(c.yield.region.axes[i].max)}};
  Json j{
      {"camera",
       {{"fx", cam.fx},
        {"fy", cam.fy},
        {"cx", cam.cx},
        {"cy", cam.cy},
        {"width", cam.width},
        {"height", cam.height},
        {"depth_scale", cam.depth_scale},
        {"min_depth", cam.min_depth},
        {"max_depth", cam.max_depth}}},
      {"scene",
       {{"lane_length", sc.lane_length},
        {"fruit_count", sc.fruit_count},
        {"diameter_min", sc.diameter_min},
        {"diameter_max", sc.diameter_max},
        {"row_distance", sc.row_distance},
        {"row_depth", sc.row_depth},
        {"height_min", sc.height_min},
        {"height_max", sc.height_max},
        {"cluster_size", sc.cluster_size},
        {"cluster_spread", sc.cluster_spread},
        {"min_separation", sc.min_separation},
        {"ripe_fraction", sc.ripe_fraction}}},
      {"trajectory",
       {{"speed", tr.speed},
        {"frame_rate", tr.frame_rate},
        {"mounting", tr.mounting == sim::Mounting::forward ? "forward" : "tilted"},
        {"yaw_deg", tr.yaw_deg},
        {"pitch_deg", tr.pitch_deg},
        {"camera_height", tr.camera_height},
        {"lateral_offset", tr.lateral_offset}}},
      {"noise",
       {{"pixel_sigma", n.pixel_sigma},
        {"depth_sigma", n.depth_sigma},
        {"miss_rate", n.miss_rate},
        {"false_positive_rate", n.false_positive_rate},
        {"false_positive_depth", n.false_positive_depth},
        {"occluder_probability", n.occluder_probability},
        {"occluder_offset", n.occluder_offset},
        {"occluder_coverage", n.occluder_coverage},
        {"scripted_occlusions", occl}}},
      {"tracker",
       {{"dist_max", c.tracker.dist_max},
        {"w_p", c.tracker.w_p},
        {"w_v", c.tracker.w_v},
        {"min_associations", c.tracker.min_associations}}},
      {"yield",
       {{"min_volume", c.yield.min_volume},
        {"target_class", c.yield.target_class ? Json(*c.yield.target_class) : Json(nullptr)},
        {"weight_model", yield::to_string(c.yield.model.provenance)},
        {"region", region}}},
      {"eval",
       {{"match_radius", c.eval.match_radius},
        {"duplicate_radius", c.eval.duplicate_radius},
        {"sample_interval", c.eval.sample_interval},
        {"max_samples", c.eval.max_samples},
        {"raster_overlay", c.eval.raster_overlay}}},
  };
  return j.dump(2) + "\n";
}

}  // namespace fruitrack::config
