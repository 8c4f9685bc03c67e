#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "app.hpp"
#include "fruitrack/dataset.hpp"
#include "test_support.hpp"

using namespace fruitrack;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = app::run(args, out, err);
  return {code, out.str(), err.str()};
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kNoiseless = R"({"noise": {"pixel_sigma": 0, "depth_sigma": 0, "miss_rate": 0, "false_positive_rate": 0}})";

}  // namespace

TEST_CASE("usage errors map to the config exit code") {
  CHECK(run({}).code == app::kConfigError);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"simulate"}).code == app::kConfigError);
  CHECK(run({"track", "--dataset", "x", "--weight-model", "cubic"}).code == app::kConfigError);
  CHECK(run({"frobnicate"}).code == app::kConfigError);
}

TEST_CASE("malformed config exits 2 without writing output") {
  testing::TempDir dir("cli-bad");
  write_text(dir / "bad.json", R"({"scene": {"fruit_count": "x"}})");
  const auto r = run({"run-all", "--config", (dir / "bad.json").string(), "--out", (dir / "out").string()});
  CHECK(r.code == app::kConfigError);
  CHECK(r.err.find("config error") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out"));
}

TEST_CASE("missing dataset is a data error") {
  testing::TempDir dir("cli-missing");
  CHECK(run({"track", "--dataset", (dir / "nothing").string()}).code == app::kDataError);
}

TEST_CASE("noiseless run-all counts every fruit") {
  testing::TempDir dir("cli-run");
  write_text(dir / "cfg.json", kNoiseless);
  const auto r = run({"run-all", "--config", (dir / "cfg.json").string(), "--seed", "3", "--out",
                      (dir / "out").string(), "--weight-model", "fitted"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("counting accuracy:    100.0%") != std::string::npos);
  for (const char* f : {"manifest.json", "tracks.jsonl", "yield_report.json", "metrics.json", "overlay.jsonl"})
    CHECK(fs::exists(dir / "out" / f));
  const auto report = dataset::read_yield_report(dir / "out" / "yield_report.json");
  CHECK(report.count == 50);
  CHECK(report.model == yield::ModelProvenance::fitted);
}

TEST_CASE("stages run separately and the same seed gives the same metrics") {
  testing::TempDir dir("cli-stages");
  auto pipeline = [&](const std::string& name) {
    const auto ds = (dir / name).string();
    REQUIRE(run({"simulate", "--seed", "17", "--out", ds}).code == 0);
    REQUIRE(run({"track", "--dataset", ds}).code == 0);
    REQUIRE(run({"yield", "--dataset", ds}).code == 0);
    const auto e = run({"eval", "--dataset", ds});
    REQUIRE(e.code == 0);
    return std::make_pair(e.out, read_text(dir / name / "metrics.json"));
  };
  const auto a = pipeline("a");
  const auto b = pipeline("b");
  CHECK(a == b);
  CHECK(a.first.find("counting accuracy") != std::string::npos);
  CHECK(run({"overlay", "--dataset", (dir / "a").string(), "--raster"}).code == 0);
  CHECK(fs::exists(dir / "a" / "overlay" / "000000.ppm"));
}

TEST_CASE("yield without tracks is a data error") {
  testing::TempDir dir("cli-notracks");
  const auto ds = (dir / "d").string();
  REQUIRE(run({"simulate", "--seed", "1", "--out", ds}).code == 0);
  CHECK(run({"yield", "--dataset", ds}).code == app::kDataError);
}

#ifdef FRUITRACK_CLI_PATH
TEST_CASE("the executable reports exit codes") {
  testing::TempDir dir("cli-exe");
  const std::string cmd = std::string(FRUITRACK_CLI_PATH) + " track --dataset " + (dir / "none").string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) == app::kDataError);
}
#endif
