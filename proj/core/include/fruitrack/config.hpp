#pragma once

#include <filesystem>
#include <string>

#include "fruitrack/harness.hpp"
#include "fruitrack/simulator.hpp"
#include "fruitrack/tracker.hpp"
#include "fruitrack/yield.hpp"

namespace fruitrack::config {

struct EvalConfig {
  double match_radius = harness::kDefaultMatchRadius;
  double duplicate_radius = harness::kDefaultDuplicateRadius;
  double sample_interval = 1.0;  // seconds
  std::size_t max_samples = 10;
  bool raster_overlay = false;

  void validate() const;
};

/// Everything a run can be configured with. Every section and key is optional;
/// omitted values keep their defaults.
struct AppConfig {
  sim::SimulationSpec simulation;
  tracker::TrackerConfig tracker;
  yield::YieldConfig yield;
  EvalConfig eval;

  void validate() const;
};

/// Parses a JSON config document. Unknown keys, wrong types and invariant
/// violations raise ConfigError.
AppConfig parse_config(const std::string& text);
AppConfig load_config(const std::filesystem::path& path);

/// Full config with every key spelled out.
std::string dump_config(const AppConfig& config);

}  // namespace fruitrack::config
