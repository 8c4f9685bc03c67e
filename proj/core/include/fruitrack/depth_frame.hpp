#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace fruitrack::dataset {

/// Row-major 16-bit range image. A value of 0 marks an invalid pixel.
struct DepthFrame {
  long frame_id = 0;
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> values;

  DepthFrame() = default;
  DepthFrame(long id, int w, int h)
      : frame_id(id), width(w), height(h), values(std::size_t(w) * std::size_t(h), 0) {}

  std::uint16_t at(int x, int y) const { return values[std::size_t(y) * width + x]; }
  std::uint16_t& at(int x, int y) { return values[std::size_t(y) * width + x]; }

  friend bool operator==(const DepthFrame&, const DepthFrame&) = default;
};

inline constexpr std::uint16_t kInvalidDepth = 0;

/// Binary P5 PGM, maxval 65535, big-endian samples. The frame id travels in a
/// "# frame_id N" header comment.
void write_depth_pgm(const DepthFrame& frame, const std::filesystem::path& path);
DepthFrame read_depth_pgm(const std::filesystem::path& path);

}  // namespace fruitrack::dataset
