#include <doctest.h>

#include <fstream>
#include <random>

#include "fruitrack/depth_frame.hpp"
#include "fruitrack/errors.hpp"
#include "test_support.hpp"

using namespace fruitrack;
using namespace fruitrack::dataset;

TEST_CASE("all-zero frame round-trips") {
  testing::TempDir dir;
  DepthFrame f(12, 7, 5);
  write_depth_pgm(f, dir / "z.pgm");
  CHECK(read_depth_pgm(dir / "z.pgm") == f);
}

TEST_CASE("random frames round-trip bit-exact over 100 seeds") {
  testing::TempDir dir;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const int w = 1 + int(rng() % 40), h = 1 + int(rng() % 30);
    DepthFrame f(long(rng() % 100000), w, h);
    for (auto& v : f.values) v = std::uint16_t(rng());
    write_depth_pgm(f, dir / "r.pgm");
    REQUIRE(read_depth_pgm(dir / "r.pgm") == f);
  }
}

TEST_CASE("samples are stored big-endian") {
  testing::TempDir dir;
  DepthFrame f(0, 1, 1);
  f.values[0] = 0x1234;
  write_depth_pgm(f, dir / "be.pgm");
  std::ifstream in(dir / "be.pgm", std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  REQUIRE(bytes.size() >= 2);
  CHECK(static_cast<unsigned char>(bytes[bytes.size() - 2]) == 0x12);
  CHECK(static_cast<unsigned char>(bytes[bytes.size() - 1]) == 0x34);
  CHECK(bytes.rfind("P5\n", 0) == 0);
}

TEST_CASE("depth units convert with depth_scale") {
  DepthFrame f(0, 1, 1);
  f.values[0] = 1000;
  CHECK(f.at(0, 0) * 0.001 == doctest::Approx(1.0));
}

TEST_CASE("malformed PGM files are rejected") {
  testing::TempDir dir;
  auto write = [&](const std::string& name, const std::string& bytes) {
    std::ofstream(dir / name, std::ios::binary) << bytes;
    return dir / name;
  };
  CHECK_THROWS_AS(read_depth_pgm(write("maxval.pgm", "P5\n2 1\n255\n\x01\x02")), DataError);
  CHECK_THROWS_AS(read_depth_pgm(write("short.pgm", std::string("P5\n2 2\n65535\n\x00\x01\x00", 17))), DataError);
  CHECK_THROWS_AS(read_depth_pgm(write("ascii.pgm", "P2\n1 1\n65535\n7\n")), DataError);
  CHECK_THROWS_AS(read_depth_pgm(dir / "missing.pgm"), DataError);
  // Foreign files without the frame comment still load.
  const auto plain = read_depth_pgm(write("plain.pgm", std::string("P5\n1 1\n65535\n\x03\xe8", 15)));
  CHECK(plain.at(0, 0) == 1000);
  CHECK(plain.frame_id == 0);
}
