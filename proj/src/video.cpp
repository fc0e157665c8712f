#include "rdbench/video.hpp"

#include "rdbench/error.hpp"

namespace rdbench {

void VideoSpec::validate() const {
  if (width <= 0 || height <= 0)
    throw ValidationError("video dimensions must be positive, got " + std::to_string(width) +
                          "x" + std::to_string(height));
  if (chroma == Chroma::C420 && (width % 2 != 0 || height % 2 != 0))
    throw ValidationError("4:2:0 video requires even dimensions, got " + std::to_string(width) +
                          "x" + std::to_string(height));
  if (bit_depth != 8 && bit_depth != 10)
    throw ValidationError("bit depth must be 8 or 10, got " + std::to_string(bit_depth));
  if (fps_den <= 0) throw ValidationError("fps denominator must be positive");
  if (fps_num <= 0) throw ValidationError("fps numerator must be positive");
  if (frame_count < 0) throw ValidationError("frame count must be non-negative");
}

FrameBuffer::FrameBuffer(const VideoSpec& s)
    : spec(s),
      y(size_t(s.luma_samples()), 0),
      cb(size_t(s.chroma_samples()), 0),
      cr(size_t(s.chroma_samples()), 0) {}

void FrameBuffer::validate() const {
  spec.validate();
  if (int64_t(y.size()) != spec.luma_samples() || int64_t(cb.size()) != spec.chroma_samples() ||
      int64_t(cr.size()) != spec.chroma_samples())
    throw ValidationError("frame plane sizes do not match spec geometry");
  const uint16_t maxv = uint16_t(spec.max_value());
  for (const auto* plane : {&y, &cb, &cr})
    for (uint16_t s : *plane)
      if (s > maxv)
        throw ValidationError("sample value " + std::to_string(s) + " exceeds " +
                              std::to_string(maxv) + " for " + std::to_string(spec.bit_depth) +
                              "-bit video");
}

std::string to_string(Chroma c) {
  switch (c) {
    case Chroma::C420:
      return "420";
  }
  return "?";
}

}  // namespace rdbench
