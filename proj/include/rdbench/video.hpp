#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rdbench {

enum class Chroma { C420 };

// Geometry and timing of a planar video stream.
struct VideoSpec {
  int width = 0;
  int height = 0;
  int bit_depth = 8;  // 8 or 10
  Chroma chroma = Chroma::C420;
  int64_t fps_num = 0;
  int64_t fps_den = 1;
  int64_t frame_count = 0;  // 0 until sized for raw streams

  int max_value() const { return (1 << bit_depth) - 1; }
  int chroma_width() const { return width / 2; }
  int chroma_height() const { return height / 2; }
  int bytes_per_sample() const { return bit_depth > 8 ? 2 : 1; }
  int64_t luma_samples() const { return int64_t(width) * height; }
  int64_t chroma_samples() const { return int64_t(chroma_width()) * chroma_height(); }
  int64_t samples_per_frame() const { return luma_samples() + 2 * chroma_samples(); }
  int64_t frame_bytes() const { return samples_per_frame() * bytes_per_sample(); }
  double fps() const { return double(fps_num) / double(fps_den); }

  // Throws ValidationError on odd dims, bad depth, or non-positive frame rate.
  void validate() const;

  bool same_geometry(const VideoSpec& o) const {
    return width == o.width && height == o.height && bit_depth == o.bit_depth &&
           chroma == o.chroma;
  }
  bool operator==(const VideoSpec& o) const = default;
};

// One decoded frame: planar Y, Cb, Cr in 16-bit storage. Immutable by convention
// once filled; cheap to move, safe to share across threads by value.
struct FrameBuffer {
  VideoSpec spec;
  std::vector<uint16_t> y;
  std::vector<uint16_t> cb;
  std::vector<uint16_t> cr;

  FrameBuffer() = default;
  explicit FrameBuffer(const VideoSpec& s);

  // Throws ValidationError if plane sizes or sample ranges break the spec.
  void validate() const;

  bool operator==(const FrameBuffer& o) const = default;
};

std::string to_string(Chroma c);

}  // namespace rdbench
