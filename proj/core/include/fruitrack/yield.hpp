#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fruitrack/classes.hpp"
#include "fruitrack/tracker.hpp"

namespace fruitrack::yield {

struct AxisBounds {
  std::optional<double> min;
  std::optional<double> max;

  friend bool operator==(const AxisBounds&, const AxisBounds&) = default;
};

/// Optional per-axis world bounds (x, y, z). Missing bounds do not constrain.
struct RegionFilter {
  std::array<AxisBounds, 3> axes;

  bool contains(const Eigen::Vector3d& p) const;
  void validate() const;

  friend bool operator==(const RegionFilter&, const RegionFilter&) = default;
};

enum class ModelProvenance { published, fitted };

std::string to_string(ModelProvenance p);
ModelProvenance provenance_from_string(const std::string& s);

/// Cubic mapping from fruit height in millimeters to weight in grams.
struct WeightModel {
  double a3 = 0.0;
  double a2 = 0.0;
  double a1 = 0.0;
  double a0 = 0.0;
  ModelProvenance provenance = ModelProvenance::fitted;

  double operator()(double height_mm) const { return ((a3 * height_mm + a2) * height_mm + a1) * height_mm + a0; }

  /// weight = 0.00178 h^3 + 0.00993 h^2 - 7.36 h + 192
  static WeightModel published();
  /// Exact quadratic through kReferenceSamples.
  static WeightModel fitted_reference();
  static WeightModel by_name(const std::string& name);

  friend bool operator==(const WeightModel&, const WeightModel&) = default;
};

struct HeightWeight {
  double height_mm = 0.0;
  double weight_g = 0.0;
};

/// Three hand-weighed calibration fruits.
inline constexpr std::array<HeightWeight, 3> kReferenceSamples{{{35.0, 13.5}, {40.0, 18.1}, {42.0, 23.0}}};

/// Throws ConfigError for non-positive heights.
double weight_from_height(double height_mm, const WeightModel& model);

/// Interpolating quadratic (a3 = 0) through three samples. Throws ConfigError
/// when two heights coincide.
WeightModel fit_weight_quadratic(std::span<const HeightWeight, 3> samples);

struct YieldConfig {
  RegionFilter region;
  double min_volume = 1.2e-5;  // m^3
  std::optional<int> target_class = classes::kRipe;
  WeightModel model = WeightModel::published();

  void validate() const;
};

struct FilterStats {
  long region = 0;
  long volume = 0;
  long class_mismatch = 0;

  long total() const { return region + volume + class_mismatch; }
  friend bool operator==(const FilterStats&, const FilterStats&) = default;
};

struct FilterResult {
  std::vector<tracker::Track> kept;
  FilterStats rejected;
};

/// Keeps a track iff it passes region, volume and class checks; a rejected
/// track is charged to the first failing check in that order.
FilterResult filter_tracks(std::span<const tracker::Track> tracks, const YieldConfig& config);

struct YieldEntry {
  long track_id = 0;
  double height_mm = 0.0;
  double weight_g = 0.0;

  friend bool operator==(const YieldEntry&, const YieldEntry&) = default;
};

struct YieldReport {
  long count = 0;
  std::vector<YieldEntry> entries;  // ascending track id
  double total_weight_g = 0.0;
  double average_weight_g = 0.0;
  FilterStats rejected;
  ModelProvenance model = ModelProvenance::published;

  friend bool operator==(const YieldReport&, const YieldReport&) = default;
};

YieldReport estimate_yield(std::span<const tracker::Track> tracks, const YieldConfig& config);

}  // namespace fruitrack::yield
