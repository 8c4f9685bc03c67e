#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fruitrack/harness.hpp"
#include "test_support.hpp"

using namespace fruitrack;
using namespace fruitrack::harness;
using dataset::GroundTruthFruit;
using tracker::Track;

namespace {

Track track_at(long id, Eigen::Vector3d c, double size = 0.03) {
  Track t;
  t.id = id;
  t.cube = {c, {size, size, size}, geometry::Frame::world};
  t.class_histogram[classes::kRipe] = {3, 3};
  t.n_assoc = 3;
  return t;
}

GroundTruthFruit fruit_at(long id, Eigen::Vector3d c, double weight = 20.0) {
  GroundTruthFruit f;
  f.id = id;
  f.center = c;
  f.diameter = 0.035;
  f.class_id = classes::kRipe;
  f.weight = weight;
  return f;
}

yield::YieldReport report_with(long count, double average) {
  yield::YieldReport r;
  r.count = count;
  r.average_weight_g = average;
  r.total_weight_g = average * double(count);
  return r;
}

}  // namespace

TEST_CASE("matching examples") {
  const std::vector<GroundTruthFruit> fruits{fruit_at(0, {0, 0, 0}), fruit_at(1, {1, 0, 0})};
  SUBCASE("one-to-one within radius") {
    const std::vector<Track> tracks{track_at(0, {0.01, 0, 0}), track_at(1, {1, 0.005, 0}), track_at(2, {5, 0, 0})};
    const auto m = match_to_ground_truth(tracks, fruits);
    REQUIRE(m.pairs.size() == 2);
    CHECK(m.pairs[0].track_id == 1);
    CHECK(m.pairs[0].fruit_id == 1);
    CHECK(m.pairs[1].track_id == 0);
    CHECK(std::abs(m.pairs[1].error - 0.01) < 1e-12);
    CHECK(m.unmatched_tracks == std::vector<long>{2});
    CHECK(m.unmatched_fruits.empty());
    CHECK(m.duplicate_tracks.empty());
  }
  SUBCASE("two tracks on one fruit: the nearer wins, the other is a duplicate") {
    const std::vector<Track> tracks{track_at(0, {0.015, 0, 0}), track_at(1, {0.005, 0, 0})};
    const auto m = match_to_ground_truth(tracks, fruits);
    REQUIRE(m.pairs.size() == 1);
    CHECK(m.pairs[0].track_id == 1);
    CHECK(m.duplicate_tracks == std::vector<long>{0});
    CHECK(m.unmatched_fruits == std::vector<long>{1});
  }
  SUBCASE("beyond the radius nothing matches") {
    const std::vector<Track> tracks{track_at(0, {0.021, 0, 0})};
    const auto m = match_to_ground_truth(tracks, fruits);
    CHECK(m.pairs.empty());
    CHECK(m.duplicate_tracks.empty());
  }
  SUBCASE("equal distances fall to the lower ids") {
    const std::vector<Track> tracks{track_at(3, {0.5, 0, 0}), track_at(2, {0.5, 0, 0})};
    const auto m = match_to_ground_truth(tracks, fruits, 0.6);
    REQUIRE(m.pairs.size() == 2);
    CHECK(m.pairs[0].track_id == 2);
    CHECK(m.pairs[0].fruit_id == 0);
    CHECK(m.pairs[1].track_id == 3);
    CHECK(m.pairs[1].fruit_id == 1);
  }
}

TEST_CASE("property: matching is invariant to input order and one-to-one") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<GroundTruthFruit> fruits;
    std::vector<Track> tracks;
    for (long i = 0; i < 15; ++i)
      fruits.push_back(fruit_at(i, {testing::uniform(rng, 0, 0.3), testing::uniform(rng, 0, 0.1), 0}));
    for (long i = 0; i < 18; ++i) {
      Eigen::Vector3d c = fruits[std::size_t(rng() % fruits.size())].center;
      c += Eigen::Vector3d(testing::uniform(rng, -0.02, 0.02), testing::uniform(rng, -0.02, 0.02), 0);
      // Exact duplicates provoke distance ties.
      if (i > 0 && rng() % 5 == 0) c = tracks.back().cube.center;
      tracks.push_back(track_at(i, c));
    }
    const auto a = match_to_ground_truth(tracks, fruits);
    std::shuffle(tracks.begin(), tracks.end(), rng);
    std::shuffle(fruits.begin(), fruits.end(), rng);
    const auto b = match_to_ground_truth(tracks, fruits);
    REQUIRE(a.pairs.size() == b.pairs.size());
    std::set<long> ts, fs;
    for (std::size_t i = 0; i < a.pairs.size(); ++i) {
      CHECK(a.pairs[i].track_id == b.pairs[i].track_id);
      CHECK(a.pairs[i].fruit_id == b.pairs[i].fruit_id);
      CHECK(a.pairs[i].error <= a.radius);
      ts.insert(a.pairs[i].track_id);
      fs.insert(a.pairs[i].fruit_id);
    }
    CHECK(ts.size() == a.pairs.size());
    CHECK(fs.size() == a.pairs.size());
    CHECK(a.unmatched_tracks == b.unmatched_tracks);
    CHECK(a.duplicate_tracks == b.duplicate_tracks);
    CHECK(a.unmatched_fruits == b.unmatched_fruits);
  }
}

TEST_CASE("metric examples") {
  std::vector<GroundTruthFruit> truth;
  for (long i = 0; i < 89; ++i) truth.push_back(fruit_at(i, {double(i), 0, 0}, 19.14));
  const auto m = compute_metrics(report_with(94, 21.53), truth, MatchResult{});
  REQUIRE(m.count_error);
  CHECK(format_percent(*m.count_error) == "5.6%");
  CHECK(format_percent(*m.counting_accuracy) == "94.4%");
  REQUIRE(m.average_weight_error);
  CHECK(format_percent(*m.average_weight_error) == "12.5%");
  CHECK(std::abs(*m.count_error - 5.0 / 89.0) < 1e-12);
  CHECK(format_percent(*totals_report(193, 82).ratio()) == "42.5%");
  CHECK_FALSE(totals_report(0, 4).ratio());

  const auto empty = compute_metrics(report_with(3, 10), {}, MatchResult{});
  CHECK_FALSE(empty.counting_accuracy);
  CHECK(format_metrics(empty).find("n/a") != std::string::npos);

  CHECK_FALSE(relative_error(1.0, 0.0));
  CHECK(*relative_error(0.0, 4.0) == 1.0);
}

TEST_CASE("property: accuracy is 100% iff counts are equal") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const long n = 1 + long(rng() % 60), est = long(rng() % 70);
    std::vector<GroundTruthFruit> truth;
    for (long k = 0; k < n; ++k) truth.push_back(fruit_at(k, {double(k), 0, 0}));
    const auto m = compute_metrics(report_with(est, 20.0), truth, MatchResult{});
    REQUIRE(m.counting_accuracy);
    CHECK((*m.counting_accuracy == 1.0) == (est == n));
    CHECK(std::isfinite(*m.counting_accuracy));
  }
}

TEST_CASE("counted_fruits follows the yield class and region") {
  yield::YieldConfig cfg;
  cfg.region.axes[0].max = 5.0;
  auto unripe = fruit_at(1, {1, 0, 0});
  unripe.class_id = classes::kUnripe;
  const std::vector<GroundTruthFruit> all{fruit_at(0, {1, 0, 0}), unripe, fruit_at(2, {6, 0, 0})};
  const auto kept = counted_fruits(all, cfg);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].id == 0);
  cfg.target_class.reset();
  CHECK(counted_fruits(all, cfg).size() == 2);
}

TEST_CASE("frame sample report counts left-half points") {
  sim::TrajectorySpec t;
  const auto poses = sim::generate_trajectory(t, 4.0);  // 60 frames
  const geometry::CameraIntrinsics intr;
  // Camera at x=0 sees x in about [-0.47, 0.47] at 0.42 m; left half is x < 0.
  const std::vector<GroundTruthFruit> fruits{fruit_at(0, {-0.1, 0.42, 1.2}), fruit_at(1, {0.1, 0.42, 1.2})};
  const std::vector<Track> tracks{track_at(0, {-0.1, 0.42, 1.2})};
  const auto r = frame_sample_report(poses, intr, fruits, tracks, 30.0, 1.0);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].frame_id == 0);
  CHECK(r.rows[1].frame_id == 30);
  CHECK(r.rows[0].ground_truth == 1);
  CHECK(r.rows[0].tracks == 1);
  CHECK(r.rows[1].ground_truth == 0);
  CHECK(r.total_ground_truth == 1);
  CHECK(*r.ratio() == 1.0);
  CHECK(frame_sample_report(poses, intr, fruits, tracks, 30.0, 0.1, 4).rows.size() == 4);
  CHECK(frame_sample_report({}, intr, fruits, tracks, 30.0, 1.0).rows.empty());
}

TEST_CASE("overlay records only include forward projections that touch the image") {
  sim::TrajectorySpec t;
  const auto poses = sim::generate_trajectory(t, 0.1);
  const geometry::CameraIntrinsics intr;
  const std::vector<Track> tracks{track_at(1, {0.0, 0.42, 1.2}), track_at(0, {0.0, -0.42, 1.2}),
                                  track_at(2, {3.0, 0.42, 1.2})};
  const auto recs = overlay_records(poses, intr, tracks);
  REQUIRE(recs.size() == poses.size());
  for (const auto& r : recs) {
    CHECK(r.track_id == 1);
    CHECK(r.u_min < r.u);
    CHECK(r.u < r.u_max);
  }
  CHECK(std::abs(recs[0].u - intr.cx) < 1e-9);
  CHECK(std::abs((recs[0].u_max - recs[0].u_min) - intr.fx * 0.03 / 0.42) < 1e-9);
  CHECK(overlay_records(poses, intr, {}).empty());
}

TEST_CASE("run_tracking on a dataset equals the in-memory pipeline") {
  sim::SimulationSpec spec;
  spec.scene.lane_length = 3.0;
  spec.scene.fruit_count = 10;
  const auto sim = sim::simulate(spec, 4);
  testing::TempDir dir("harness");
  sim::export_dataset(sim, dir.path());
  const auto ds = dataset::Dataset::load(dir.path());
  const auto a = run_tracking(ds, {});
  const auto b = run_tracking(sim, {});
  CHECK(a.store.tracks() == b.store.tracks());
  CHECK(a.rejections == b.rejections);
  CHECK(a.frames == long(sim.trajectory.size()));
  CHECK(a.boxes == b.boxes);
  CHECK(a.detections + a.rejections.total() == a.boxes);
  CHECK(a.skipped_frames == 0);

  const auto recs = export_overlay(ds, a.store.reliable_tracks(), dir.path(), true);
  CHECK(std::filesystem::exists(dir / "overlay.jsonl"));
  CHECK(std::filesystem::exists(dir.path() / "overlay" / "000000.ppm"));
  CHECK_FALSE(recs.empty());
}
