#include <doctest.h>

#include <algorithm>
#include <array>

#include "fruitrack/errors.hpp"
#include "fruitrack/tracker.hpp"
#include "test_support.hpp"

using namespace fruitrack;
using namespace fruitrack::tracker;
using detect3d::Detection3D;
using testing::world_detection;

TEST_CASE("a detection inside the gate updates the track by the position weight") {
  TrackStore store;
  store.process_frame(0, std::vector{world_detection(0, {0, 0, 0})});
  const auto r = store.process_frame(1, std::vector{world_detection(1, {0.03, 0, 0})});
  REQUIRE(r.matches.size() == 1);
  CHECK(r.new_track_ids.empty());
  const Track& t = store.tracks().at(0);
  // (1 - 0.7) * 0 + 0.7 * 0.03
  CHECK(std::abs(t.cube.center.x() - 0.021) < 1e-15);
  CHECK(t.n_assoc == 2);
  CHECK(t.last_matched_frame == 1);
}

TEST_CASE("a detection outside the gate seeds a new track") {
  TrackStore store;
  store.process_frame(0, std::vector{world_detection(0, {0, 0, 0})});
  const auto r = store.process_frame(1, std::vector{world_detection(1, {0.05, 0, 0})});
  CHECK(r.matches.empty());
  REQUIRE(r.new_track_ids.size() == 1);
  CHECK(store.tracks().size() == 2);
  CHECK(store.tracks()[1].n_assoc == 1);
  CHECK(store.tracks()[1].created_frame == 1);
  // Exactly on the gate still matches.
  const auto g = store.process_frame(2, std::vector{world_detection(2, {0.0, 0.04, 0})});
  CHECK(g.matches.size() == 1);
}

TEST_CASE("several detections may join one track in a frame") {
  TrackStore store;
  store.process_frame(0, std::vector{world_detection(0, {0, 0, 0}, {0.02, 0.02, 0.02})});
  const auto r = store.process_frame(
      1, std::vector{world_detection(1, {0.01, 0, 0}, {0.04, 0.04, 0.04}), world_detection(1, {0.02, 0, 0})});
  CHECK(r.matches.size() == 2);
  const Track& t = store.tracks().at(0);
  CHECK(t.n_assoc == 3);
  // Two sequential convex updates in detection order.
  const double x1 = 0.3 * 0.0 + 0.7 * 0.01;
  const double x2 = 0.3 * x1 + 0.7 * 0.02;
  CHECK(std::abs(t.cube.center.x() - x2) < 1e-15);
  const double e1 = 0.3 * 0.02 + 0.7 * 0.04;
  const double e2 = 0.3 * e1 + 0.7 * 0.03;
  CHECK(std::abs(t.cube.w() - e2) < 1e-15);
}

TEST_CASE("w_p = 1 makes the track follow the last detection") {
  TrackerConfig cfg;
  cfg.w_p = 1.0;
  TrackStore store(cfg);
  store.process_frame(0, std::vector{world_detection(0, {0, 0, 0})});
  store.process_frame(1, std::vector{world_detection(1, {0.01, 0.02, 0})});
  store.process_frame(2, std::vector{world_detection(2, {0.02, 0.01, 0.01})});
  CHECK(store.tracks()[0].cube.center == Eigen::Vector3d(0.02, 0.01, 0.01));
}

TEST_CASE("association uses the frame-start snapshot and nearest track") {
  TrackStore store;
  store.process_frame(0, std::vector{world_detection(0, {0, 0, 0}), world_detection(0, {0.05, 0, 0})});
  // 0.03 is nearer to track 1 (0.05) than to track 0.
  auto r = store.process_frame(1, std::vector{world_detection(1, {0.03, 0, 0})});
  REQUIRE(r.matches.size() == 1);
  CHECK(r.matches[0].track_id == 1);
  // Equidistant: lower id wins.
  TrackStore tie;
  tie.process_frame(0, std::vector{world_detection(0, {0, 0, 0}), world_detection(0, {0.06, 0, 0})});
  r = tie.process_frame(1, std::vector{world_detection(1, {0.03, 0, 0})});
  CHECK(r.matches[0].track_id == 0);
  // New tracks are not candidates within the frame that created them.
  TrackStore fresh;
  r = fresh.process_frame(0, std::vector{world_detection(0, {0, 0, 0}), world_detection(0, {0.001, 0, 0})});
  CHECK(r.new_track_ids.size() == 2);
}

TEST_CASE("reliable_tracks applies min_associations") {
  TrackStore store;
  store.process_frame(0, std::vector{world_detection(0, {0, 0, 0})});
  CHECK(store.reliable_tracks().empty());
  store.process_frame(1, std::vector{world_detection(1, {0.001, 0, 0})});
  store.process_frame(2, std::vector{world_detection(2, {0.002, 0, 0})});
  REQUIRE(store.reliable_tracks().size() == 1);
  CHECK(store.reliable_tracks()[0].n_assoc == 3);

  TrackerConfig one;
  one.min_associations = 1;
  TrackStore all(one);
  all.process_frame(0, std::vector{world_detection(0, {0, 0, 0}), world_detection(0, {1, 0, 0})});
  CHECK(all.reliable_tracks().size() == 2);
}

TEST_CASE("track_class: majority with most-recent tie break") {
  Track t;
  t.class_histogram = {{2, {3, 3}}};
  CHECK(track_class(t) == 2);
  t.class_histogram = {{2, {2, 3}}, {1, {1, 2}}};
  CHECK(track_class(t) == 2);
  t.class_histogram = {{2, {1, 1}}, {1, {1, 2}}};
  CHECK(track_class(t) == 1);

  // Same through the store: ripe then unripe.
  TrackStore store;
  store.process_frame(0, std::vector{world_detection(0, {0, 0, 0}, {0.03, 0.03, 0.03}, 2)});
  store.process_frame(1, std::vector{world_detection(1, {0, 0, 0}, {0.03, 0.03, 0.03}, 1)});
  CHECK(track_class(store.tracks()[0]) == 1);
}

TEST_CASE("contract violations") {
  TrackStore store;
  CHECK_THROWS_AS(store.process_frame(0, std::vector{world_detection(0, {0, 0, 0}), world_detection(1, {1, 0, 0})}),
                  ContractViolation);
  auto cam = world_detection(3, {0, 0, 0});
  cam.cube.frame = geometry::Frame::camera;
  CHECK_THROWS_AS(store.process_frame(3, std::vector{cam}), ContractViolation);
  store.process_frame(5, {});
  CHECK_THROWS_AS(store.process_frame(5, {}), ContractViolation);
  TrackerConfig bad;
  bad.w_v = 0.0;
  CHECK_THROWS_AS(TrackStore{bad}, ConfigError);
}

namespace {

std::vector<std::vector<Detection3D>> random_stream(std::mt19937_64& rng, int frames) {
  std::vector<Eigen::Vector3d> objects;
  for (int i = 0; i < 6; ++i)
    objects.push_back({testing::uniform(rng, 0, 0.5), testing::uniform(rng, 0, 0.3), testing::uniform(rng, 0, 0.3)});
  std::vector<std::vector<Detection3D>> out;
  for (int f = 0; f < frames; ++f) {
    std::vector<Detection3D> dets;
    for (const auto& o : objects) {
      if (rng() % 3 == 0) continue;
      const Eigen::Vector3d n(testing::uniform(rng, -0.02, 0.02), testing::uniform(rng, -0.02, 0.02),
                              testing::uniform(rng, -0.02, 0.02));
      dets.push_back(world_detection(f, o + n, {0.03, 0.03, 0.03}, int(rng() % 2) + 1));
    }
    out.push_back(std::move(dets));
  }
  return out;
}

}  // namespace

TEST_CASE("property: reliable tracks never exceed detections / min_associations") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    TrackStore store;
    std::size_t previous = 0;
    const auto stream = random_stream(rng, 12);
    for (std::size_t f = 0; f < stream.size(); ++f) {
      store.process_frame(long(f), stream[f]);
      CHECK(store.tracks().size() >= previous);
      previous = store.tracks().size();
    }
    CHECK(long(store.reliable_tracks().size()) <= store.total_detections() / store.config().min_associations);
    for (std::size_t i = 0; i < store.tracks().size(); ++i) CHECK(store.tracks()[i].id == long(i));
  }
}

TEST_CASE("property: replaying a stream gives identical stores") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const auto stream = random_stream(rng, 10);
    TrackStore a, b;
    for (std::size_t f = 0; f < stream.size(); ++f) {
      a.process_frame(long(f), stream[f]);
      b.process_frame(long(f), stream[f]);
    }
    CHECK(a.tracks() == b.tracks());
  }
}

TEST_CASE("property: empty frames leave the store empty") {
  TrackStore store;
  for (long f = 0; f < 100; ++f) store.process_frame(f, {});
  CHECK(store.tracks().empty());
}

TEST_CASE("property: a noiseless stationary point is a fixed point of the update") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Vector3d p(testing::uniform(rng, -3, 3), testing::uniform(rng, -3, 3), testing::uniform(rng, -3, 3));
    TrackStore store;
    for (long f = 0; f < 20; ++f) store.process_frame(f, std::vector{world_detection(f, p)});
    REQUIRE(store.tracks().size() == 1);
    CHECK(store.tracks()[0].cube.center == p);
  }
}

TEST_CASE("known property: detection order matters when gates overlap") {
  // Track at 0; detections at +0.03 and -0.03. Matching is order-free, but the
  // sequential updates are not commutative.
  auto run = [](std::vector<Detection3D> dets) {
    TrackStore s;
    s.process_frame(0, std::vector{world_detection(0, {0, 0, 0})});
    s.process_frame(1, dets);
    return s.tracks()[0].cube.center.x();
  };
  const auto a = world_detection(1, {0.03, 0, 0}), b = world_detection(1, {-0.03, 0, 0});
  CHECK(run({a, b}) != run({b, a}));
}

TEST_CASE("property: frame result does not depend on the order existing tracks were created") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Detection3D> seeds;
    for (int k = 0; k < 6; ++k)
      seeds.push_back(world_detection(0, {testing::uniform(rng, 0, 0.4), testing::uniform(rng, 0, 0.4), 0}));
    std::vector<Detection3D> frame;
    for (int k = 0; k < 8; ++k)
      frame.push_back(world_detection(1, {testing::uniform(rng, 0, 0.4), testing::uniform(rng, 0, 0.4), 0}));
    std::vector<Detection3D> reversed(seeds.rbegin(), seeds.rend());

    TrackStore a, b;
    a.process_frame(0, seeds);
    b.process_frame(0, reversed);
    a.process_frame(1, frame);
    b.process_frame(1, frame);
    auto centers = [](const TrackStore& s) {
      std::vector<std::array<double, 4>> out;
      for (const auto& t : s.tracks())
        out.push_back({t.cube.center.x(), t.cube.center.y(), t.cube.center.z(), double(t.n_assoc)});
      std::sort(out.begin(), out.end());
      return out;
    };
    CHECK(centers(a) == centers(b));
  }
}
