#include <cctype>
#include <string>

#include "fruitrack/depth_frame.hpp"
#include "fruitrack/errors.hpp"
#include "io_util.hpp"

namespace fruitrack::dataset {

void write_depth_pgm(const DepthFrame& frame, const std::filesystem::path& path) {
  if (frame.width <= 0 || frame.height <= 0 ||
      frame.values.size() != std::size_t(frame.width) * std::size_t(frame.height)) {
    throw ContractViolation("depth frame size does not match its dimensions");
  }
  std::string out = "P5\n# frame_id " + std::to_string(frame.frame_id) + "\n" + std::to_string(frame.width) +
                    " " + std::to_string(frame.height) + "\n65535\n";
  const std::size_t header = out.size();
  out.resize(header + frame.values.size() * 2);
  for (std::size_t i = 0; i < frame.values.size(); ++i) {
    out[header + 2 * i] = char(frame.values[i] >> 8);
    out[header + 2 * i + 1] = char(frame.values[i] & 0xff);
  }
  io::atomic_write(path, out);
}

namespace {

struct HeaderReader {
  const std::string& data;
  std::size_t pos = 0;
  long frame_id = 0;
  const std::string where;

  void skip_space_and_comments() {
    while (pos < data.size()) {
      if (std::isspace(static_cast<unsigned char>(data[pos]))) {
        ++pos;
      } else if (data[pos] == '#') {
        const std::size_t eol = data.find('\n', pos);
        const std::string comment = data.substr(pos + 1, eol == std::string::npos ? std::string::npos : eol - pos - 1);
        const std::string key = " frame_id ";
        if (comment.rfind(key, 0) == 0) {
          try {
            frame_id = std::stol(comment.substr(key.size()));
          } catch (const std::exception&) {
            io::fail(where, "bad frame_id comment");
          }
        }
        pos = eol == std::string::npos ? data.size() : eol + 1;
      } else {
        break;
      }
    }
  }

  long number() {
    skip_space_and_comments();
    const std::size_t start = pos;
    while (pos < data.size() && std::isdigit(static_cast<unsigned char>(data[pos]))) ++pos;
    if (start == pos) io::fail(where, "malformed PGM header");
    if (pos - start > 9) io::fail(where, "PGM header value too large");
    return std::stol(data.substr(start, pos - start));
  }
};

}  // namespace

DepthFrame read_depth_pgm(const std::filesystem::path& path) {
  const std::string data = io::read_file(path);
  HeaderReader hr{data, 0, 0, path.string()};
  if (data.size() < 2 || data[0] != 'P' || data[1] != '5') io::fail(path.string(), "not a binary PGM (P5)");
  hr.pos = 2;
  const long width = hr.number();
  const long height = hr.number();
  const long maxval = hr.number();
  if (width <= 0 || height <= 0) io::fail(path.string(), "non-positive image size");
  if (maxval != 65535) io::fail(path.string(), "maxval must be 65535, got " + std::to_string(maxval));
  // Exactly one whitespace byte separates the header from the raster.
  if (hr.pos >= data.size() || !std::isspace(static_cast<unsigned char>(data[hr.pos])))
    io::fail(path.string(), "truncated PGM header");
  ++hr.pos;

  DepthFrame frame(hr.frame_id, int(width), int(height));
  const std::size_t need = frame.values.size() * 2;
  if (data.size() - hr.pos < need) io::fail(path.string(), "truncated PGM payload");
  const auto* p = reinterpret_cast<const unsigned char*>(data.data() + hr.pos);
  for (std::size_t i = 0; i < frame.values.size(); ++i) {
    frame.values[i] = std::uint16_t((p[2 * i] << 8) | p[2 * i + 1]);
  }
  return frame;
}

}  // namespace fruitrack::dataset
