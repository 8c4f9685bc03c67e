#include "app.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <ostream>

#include "fruitrack/config.hpp"
#include "fruitrack/dataset.hpp"
#include "fruitrack/errors.hpp"
#include "fruitrack/harness.hpp"
#include "fruitrack/simulator.hpp"

namespace fruitrack::app {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

struct Options {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out;
  std::string dataset;
  std::string weight_model;
  bool raster = false;
};

config::AppConfig load(const Options& o) {
  config::AppConfig c = o.config_path.empty() ? config::AppConfig{} : config::load_config(o.config_path);
  if (!o.weight_model.empty()) c.yield.model = yield::WeightModel::by_name(o.weight_model);
  if (o.raster) c.eval.raster_overlay = true;
  c.validate();
  return c;
}

void write_json(const fs::path& path, const Json& j) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  const fs::path tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + tmp.string());
    f << j.dump(2) << "\n";
  }
  fs::rename(tmp, path);
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json metrics_json(const harness::Metrics& m, const harness::FrameSampleReport& samples) {
  Json rows = Json::array();
  for (const auto& r : samples.rows)
    rows.push_back(Json{{"frame_id", r.frame_id}, {"timestamp", r.timestamp}, {"ground_truth", r.ground_truth},
                        {"tracks", r.tracks}});
  return Json{{"estimated_count", m.estimated_count},
              {"true_count", m.true_count},
              {"counting_accuracy", optional_json(m.counting_accuracy)},
              {"count_error", optional_json(m.count_error)},
              {"estimated_average_weight_g", m.estimated_average_weight},
              {"true_average_weight_g", optional_json(m.true_average_weight)},
              {"average_weight_error", optional_json(m.average_weight_error)},
              {"precision", optional_json(m.precision)},
              {"recall", optional_json(m.recall)},
              {"matched", m.matched},
              {"duplicate_tracks", m.duplicate_tracks},
              {"frame_samples",
               {{"rows", rows},
                {"total_ground_truth", samples.total_ground_truth},
                {"total_tracks", samples.total_tracks},
                {"ratio", optional_json(samples.ratio())}}}};
}

fs::path output_dir(const Options& o) { return o.out.empty() ? fs::path(o.dataset) : fs::path(o.out); }

// ---------------------------------------------------------------------------
// Stages

void stage_simulate(const config::AppConfig& c, std::uint64_t seed, const fs::path& out, std::ostream& os) {
  const auto sim = sim::simulate(c.simulation, seed);
  sim::export_dataset(sim, out);
  os << "simulated " << sim.scene.size() << " fruits over " << sim.trajectory.size() << " frames -> " << out.string()
     << "\n";
}

void stage_track(const config::AppConfig& c, const fs::path& dataset_dir, const fs::path& out, std::ostream& os) {
  const auto ds = dataset::Dataset::load(dataset_dir);
  const auto result = harness::run_tracking(ds, c.tracker);
  const auto reliable = result.store.reliable_tracks();
  dataset::write_tracks(reliable, out / "tracks.jsonl");
  os << "frames: " << result.frames << " (skipped " << result.skipped_frames << ")\n"
     << "2D boxes: " << result.boxes << " (dropped without pose " << result.dropped_boxes << ")\n"
     << "3D detections: " << result.detections << "\n"
     << "rejected: empty ROI " << result.rejections.empty_roi << ", invalid median "
     << result.rejections.invalid_median << ", out of range " << result.rejections.out_of_range << "\n"
     << "tracks: " << result.store.tracks().size() << " total, " << reliable.size() << " reliable\n";
}

yield::YieldReport stage_yield(const config::AppConfig& c, const fs::path& out, std::ostream& os) {
  const auto tracks = dataset::read_tracks(out / "tracks.jsonl");
  const auto report = yield::estimate_yield(tracks, c.yield);
  dataset::write_yield_report(report, out / "yield_report.json");
  char line[160];
  std::snprintf(line, sizeof line, "yield: %ld fruits, total %.2f g, average %.2f g (model %s)\n", report.count,
                report.total_weight_g, report.average_weight_g, yield::to_string(report.model).c_str());
  os << line << "filtered: region " << report.rejected.region << ", volume " << report.rejected.volume << ", class "
     << report.rejected.class_mismatch << "\n";
  return report;
}

void stage_eval(const config::AppConfig& c, const fs::path& dataset_dir, const fs::path& out, std::ostream& os) {
  const auto ds = dataset::Dataset::load(dataset_dir);
  if (!ds.ground_truth()) throw DataError(dataset_dir.string() + ": dataset has no ground truth");
  const auto tracks = dataset::read_tracks(out / "tracks.jsonl");
  const auto report = dataset::read_yield_report(out / "yield_report.json");
  const auto truth = harness::counted_fruits(*ds.ground_truth(), c.yield);
  const auto match = harness::match_to_ground_truth(tracks, truth, c.eval.match_radius, c.eval.duplicate_radius);
  const auto metrics = harness::compute_metrics(report, truth, match);
  const auto samples = harness::frame_sample_report(ds, tracks, c.eval.sample_interval, c.eval.max_samples);
  write_json(out / "metrics.json", metrics_json(metrics, samples));
  os << harness::format_metrics(metrics);
  os << "frame samples:        " << samples.total_tracks << " / " << samples.total_ground_truth << " ("
     << (samples.ratio() ? harness::format_percent(*samples.ratio()) : std::string("n/a")) << ")\n";
}

void stage_overlay(const config::AppConfig& c, const fs::path& dataset_dir, const fs::path& tracks_dir,
                   const fs::path& out, std::ostream& os) {
  const auto ds = dataset::Dataset::load(dataset_dir);
  const auto tracks = dataset::read_tracks(tracks_dir / "tracks.jsonl");
  const auto records = harness::export_overlay(ds, tracks, out, c.eval.raster_overlay);
  os << "overlay: " << records.size() << " records -> " << (out / "overlay.jsonl").string() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App cli{"fruitrack: 3D fruit tracking and yield estimation from RGB-D detections"};
  cli.require_subcommand(1);
  Options o;

  auto add_config = [&](CLI::App* sc) { sc->add_option("--config", o.config_path, "JSON config file"); };
  auto add_model = [&](CLI::App* sc) {
    sc->add_option("--weight-model", o.weight_model, "height-to-weight model")->check(CLI::IsMember({"paper", "fitted"}));
  };

  auto* simulate = cli.add_subcommand("simulate", "generate a synthetic dataset");
  add_config(simulate);
  simulate->add_option("--seed", o.seed, "64-bit seed");
  simulate->add_option("--out", o.out, "output dataset directory")->required();

  auto* track = cli.add_subcommand("track", "3D detection and tracking; writes tracks.jsonl");
  add_config(track);
  track->add_option("--dataset", o.dataset, "dataset directory")->required();
  track->add_option("--out", o.out, "output directory (default: dataset)");

  auto* yld = cli.add_subcommand("yield", "yield estimate from tracks.jsonl; writes yield_report.json");
  add_config(yld);
  add_model(yld);
  yld->add_option("--dataset", o.dataset, "dataset directory")->required();
  yld->add_option("--out", o.out, "directory holding tracks.jsonl (default: dataset)");

  auto* eval = cli.add_subcommand("eval", "compare tracks and yield against ground truth; writes metrics.json");
  add_config(eval);
  eval->add_option("--dataset", o.dataset, "dataset directory")->required();
  eval->add_option("--out", o.out, "directory holding pipeline outputs (default: dataset)");

  auto* overlay = cli.add_subcommand("overlay", "reproject tracks into every frame; writes overlay.jsonl");
  add_config(overlay);
  overlay->add_option("--dataset", o.dataset, "dataset directory")->required();
  overlay->add_option("--out", o.out, "output directory (default: dataset)");
  overlay->add_flag("--raster", o.raster, "also write one PPM per frame");

  auto* run_all = cli.add_subcommand("run-all", "simulate, track, yield, eval and overlay in one go");
  add_config(run_all);
  add_model(run_all);
  run_all->add_option("--seed", o.seed, "64-bit seed");
  run_all->add_option("--out", o.out, "output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    cli.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << cli.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    const config::AppConfig c = load(o);
    if (simulate->parsed()) {
      stage_simulate(c, o.seed, o.out, out);
    } else if (track->parsed()) {
      stage_track(c, o.dataset, output_dir(o), out);
    } else if (yld->parsed()) {
      stage_yield(c, output_dir(o), out);
    } else if (eval->parsed()) {
      stage_eval(c, o.dataset, output_dir(o), out);
    } else if (overlay->parsed()) {
      stage_overlay(c, o.dataset, o.dataset, output_dir(o), out);
    } else if (run_all->parsed()) {
      const fs::path dir = o.out;
      stage_simulate(c, o.seed, dir, out);
      stage_track(c, dir, dir, out);
      stage_yield(c, dir, out);
      stage_eval(c, dir, dir, out);
      stage_overlay(c, dir, dir, dir, out);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kOk;
}

}  // namespace fruitrack::app
