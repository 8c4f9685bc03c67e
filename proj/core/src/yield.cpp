#include "fruitrack/yield.hpp"

#include <algorithm>
#include <cmath>

#include "fruitrack/errors.hpp"

namespace fruitrack::yield {

bool RegionFilter::contains(const Eigen::Vector3d& p) const {
  for (int i = 0; i < 3; ++i) {
    if (axes[i].min && p[i] < *axes[i].min) return false;
    if (axes[i].max && p[i] > *axes[i].max) return false;
  }
  return true;
}

void RegionFilter::validate() const {
  for (const auto& a : axes) {
    if (a.min && a.max && !(*a.min < *a.max)) throw ConfigError("region filter: min must be below max");
  }
}

std::string to_string(ModelProvenance p) { return p == ModelProvenance::published ? "paper" : "fitted"; }

ModelProvenance provenance_from_string(const std::string& s) {
  if (s == "paper") return ModelProvenance::published;
  if (s == "fitted") return ModelProvenance::fitted;
  throw ConfigError("unknown weight model '" + s + "' (expected paper or fitted)");
}

WeightModel WeightModel::published() { return {0.00178, 0.00993, -7.36, 192.0, ModelProvenance::published}; }

WeightModel WeightModel::fitted_reference() { return fit_weight_quadratic(kReferenceSamples); }

WeightModel WeightModel::by_name(const std::string& name) {
  return provenance_from_string(name) == ModelProvenance::published ? published() : fitted_reference();
}

double weight_from_height(double height_mm, const WeightModel& model) {
  if (!(height_mm > 0.0)) throw ConfigError("weight_from_height: height must be positive");
  return model(height_mm);
}

WeightModel fit_weight_quadratic(std::span<const HeightWeight, 3> s) {
  const double x0 = s[0].height_mm, x1 = s[1].height_mm, x2 = s[2].height_mm;
  if (x0 == x1 || x0 == x2 || x1 == x2) throw ConfigError("fit_weight_quadratic: heights must be distinct");
  // Newton divided differences, expanded to monomial form.
  const double d01 = (s[1].weight_g - s[0].weight_g) / (x1 - x0);
  const double d12 = (s[2].weight_g - s[1].weight_g) / (x2 - x1);
  const double d012 = (d12 - d01) / (x2 - x0);
  WeightModel m;
  m.a3 = 0.0;
  m.a2 = d012;
  m.a1 = d01 - d012 * (x0 + x1);
  m.a0 = s[0].weight_g - d01 * x0 + d012 * x0 * x1;
  m.provenance = ModelProvenance::fitted;
  return m;
}

void YieldConfig::validate() const {
  region.validate();
  if (!(min_volume >= 0.0)) throw ConfigError("yield: min_volume must be non-negative");
  for (double h = 20.0; h <= 60.0; h += 1.0) {
    if (!std::isfinite(model(h))) throw ConfigError("yield: weight model is not finite on [20, 60] mm");
  }
}

FilterResult filter_tracks(std::span<const tracker::Track> tracks, const YieldConfig& config) {
  FilterResult out;
  for (const auto& t : tracks) {
    if (!config.region.contains(t.cube.center)) {
      ++out.rejected.region;
    } else if (geometry::cube_volume(t.cube) < config.min_volume) {
      ++out.rejected.volume;
    } else if (config.target_class && tracker::track_class(t) != *config.target_class) {
      ++out.rejected.class_mismatch;
    } else {
      out.kept.push_back(t);
    }
  }
  return out;
}

YieldReport estimate_yield(std::span<const tracker::Track> tracks, const YieldConfig& config) {
  FilterResult filtered = filter_tracks(tracks, config);
  std::sort(filtered.kept.begin(), filtered.kept.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

  YieldReport r;
  r.rejected = filtered.rejected;
  r.model = config.model.provenance;
  for (const auto& t : filtered.kept) {
    const double h_mm = t.cube.h() * 1000.0;
    const double w = weight_from_height(h_mm, config.model);
    r.entries.push_back({t.id, h_mm, w});
    r.total_weight_g += w;
  }
  r.count = long(r.entries.size());
  r.average_weight_g = r.count > 0 ? r.total_weight_g / double(r.count) : 0.0;
  return r;
}

}  // namespace fruitrack::yield
