#pragma once

// Shared helpers for the test suites: deterministic synthetic content and a
// scratch-directory guard. Everything here is seed-stable so expected values
// can be frozen.

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "rdbench/video.hpp"

namespace testsupport {

inline rdbench::VideoSpec make_spec(int w, int h, int depth = 8, int64_t fps_num = 30,
                                    int64_t fps_den = 1) {
  rdbench::VideoSpec s;
  s.width = w;
  s.height = h;
  s.bit_depth = depth;
  s.fps_num = fps_num;
  s.fps_den = fps_den;
  return s;
}

inline rdbench::FrameBuffer constant_frame(const rdbench::VideoSpec& spec, uint16_t y,
                                           uint16_t c = 512) {
  rdbench::FrameBuffer f(spec);
  uint16_t cval = spec.bit_depth == 8 ? uint16_t(c >> 2) : c;
  std::fill(f.y.begin(), f.y.end(), y);
  std::fill(f.cb.begin(), f.cb.end(), cval);
  std::fill(f.cr.begin(), f.cr.end(), cval);
  return f;
}

inline rdbench::FrameBuffer random_frame(const rdbench::VideoSpec& spec, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dist(0, spec.max_value());
  rdbench::FrameBuffer f(spec);
  for (auto* plane : {&f.y, &f.cb, &f.cr})
    for (auto& s : *plane) s = uint16_t(dist(rng));
  return f;
}

// Textured, temporally drifting content: a moving 2-D sinusoid over a ramp
// with hash noise. Keeps AC energy high at every block scale so the mock
// codec's RD behavior stays strictly monotone over the QP grid.
inline rdbench::FrameBuffer textured_frame(const rdbench::VideoSpec& spec, int64_t t,
                                           uint64_t seed = 7) {
  rdbench::FrameBuffer f(spec);
  const int maxv = spec.max_value();
  auto hash = [seed](int64_t x) {
    uint64_t v = uint64_t(x) * 0x9E3779B97F4A7C15ull + seed;
    v ^= v >> 33;
    v *= 0xFF51AFD7ED558CCDull;
    v ^= v >> 33;
    return v;
  };
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x) {
      double wave = 0.5 + 0.25 * std::sin(0.35 * x + 0.05 * double(t)) *
                              std::cos(0.22 * y - 0.04 * double(t));
      double ramp = 0.2 * double(x) / double(spec.width);
      double noise = double(hash(int64_t(y) * spec.width + x + t * 131) & 0xFF) / 255.0 * 0.2;
      int v = int(std::lround((wave + ramp + noise) / 1.4 * maxv));
      f.y[size_t(y) * size_t(spec.width) + size_t(x)] =
          uint16_t(std::clamp(v, 0, maxv));
    }
  for (int y = 0; y < spec.chroma_height(); ++y)
    for (int x = 0; x < spec.chroma_width(); ++x) {
      size_t i = size_t(y) * size_t(spec.chroma_width()) + size_t(x);
      f.cb[i] = uint16_t((hash(int64_t(i) * 3 + t) % uint64_t(maxv + 1)));
      f.cr[i] = uint16_t(maxv / 2 + (x + y + int(t)) % (maxv / 4));
    }
  return f;
}

inline std::vector<rdbench::FrameBuffer> textured_clip(const rdbench::VideoSpec& spec,
                                                       int64_t frames, uint64_t seed = 7) {
  std::vector<rdbench::FrameBuffer> out;
  out.reserve(size_t(frames));
  for (int64_t t = 0; t < frames; ++t) out.push_back(textured_frame(spec, t, seed));
  return out;
}

// Fresh scratch directory under the system temp root; removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    static std::atomic<uint64_t> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("rdbench_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testsupport
