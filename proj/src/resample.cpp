#include "rdbench/resample.hpp"

#include <algorithm>
#include <cmath>

#include "rdbench/error.hpp"

namespace rdbench {

namespace {

constexpr double kPi = 3.14159265358979323846;

double sinc(double x) {
  double px = kPi * x;
  return std::sin(px) / px;
}

int64_t round_half_away(double v) { return std::llround(v); }

uint16_t finalize_sample(double v, int max_value) {
  int64_t r = round_half_away(v);
  r = std::clamp<int64_t>(r, 0, max_value);
  return uint16_t(r);
}

}  // namespace

double lanczos_weight(double x, int a) {
  if (a < 1) throw ValidationError("lanczos taps parameter must be >= 1");
  double ax = std::fabs(x);
  if (ax >= double(a)) return 0.0;
  if (x == 0.0) return 1.0;
  if (std::floor(ax) == ax) return 0.0;  // exact zero at the interior integers
  return sinc(x) * sinc(x / double(a));
}

double bicubic_weight(double x, double a) {
  if (a < -1.0 || a > 0.0) throw ValidationError("bicubic coefficient must be in [-1, 0]");
  double ax = std::fabs(x);
  if (ax >= 2.0) return 0.0;
  if (ax == 0.0) return 1.0;
  if (ax == 1.0) return 0.0;  // both pieces meet at 0
  if (ax < 1.0) return ((a + 2.0) * ax - (a + 3.0)) * ax * ax + 1.0;
  return ((a * ax - 5.0 * a) * ax + 8.0 * a) * ax - 4.0 * a;
}

FilterKind FilterKind::lanczos(int a) {
  if (a < 1) throw ValidationError("lanczos taps parameter must be >= 1");
  return {Family::Lanczos, double(a)};
}

FilterKind FilterKind::bicubic(double a) {
  if (a < -1.0 || a > 0.0) throw ValidationError("bicubic coefficient must be in [-1, 0]");
  return {Family::Bicubic, a};
}

FilterKind FilterKind::parse(const std::string& text) {
  std::string name = text;
  std::string arg;
  if (auto colon = text.find(':'); colon != std::string::npos) {
    name = text.substr(0, colon);
    arg = text.substr(colon + 1);
  }
  try {
    if (name == "lanczos") return lanczos(arg.empty() ? 3 : std::stoi(arg));
    if (name == "bicubic") return bicubic(arg.empty() ? -0.5 : std::stod(arg));
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception&) {
    throw ValidationError("malformed filter parameter in '" + text + "'");
  }
  throw ValidationError("unknown filter '" + text + "' (expected lanczos[:a] or bicubic[:a])");
}

double FilterKind::weight(double x) const {
  return family == Family::Lanczos ? lanczos_weight(x, int(param)) : bicubic_weight(x, param);
}

std::string FilterKind::describe() const {
  if (family == Family::Lanczos) return "lanczos:" + std::to_string(int(param));
  char buf[32];
  std::snprintf(buf, sizeof(buf), "bicubic:%g", param);
  return buf;
}

void ResampleJob::validate() const {
  if (src_width <= 0 || src_height <= 0)
    throw ValidationError("resample source dimensions must be positive");
  if (dst_width <= 0 || dst_height <= 0)
    throw ValidationError("resample target dimensions must be positive");
}

std::vector<FilterTaps> compute_taps(int src_size, int dst_size, const FilterKind& filter) {
  if (src_size <= 0 || dst_size <= 0) throw ValidationError("tap table needs positive sizes");
  const double scale = double(src_size) / double(dst_size);
  // When downscaling the kernel is stretched by the scale factor so its
  // footprint covers a full source-pixel neighborhood.
  const double filter_scale = std::max(scale, 1.0);
  const double support = filter.radius() * filter_scale;

  std::vector<FilterTaps> taps(static_cast<size_t>(dst_size));
  for (int i = 0; i < dst_size; ++i) {
    const double center = (i + 0.5) * scale - 0.5;
    const int64_t lo = int64_t(std::ceil(center - support));
    const int64_t hi = int64_t(std::floor(center + support));
    FilterTaps t;
    t.first_index = lo;
    t.weights.reserve(size_t(hi - lo + 1));
    double sum = 0.0;
    for (int64_t s = lo; s <= hi; ++s) {
      double w = filter.weight((double(s) - center) / filter_scale);
      t.weights.push_back(w);
      sum += w;
    }
    if (sum == 0.0) throw ValidationError("degenerate filter window (all-zero weights)");
    for (double& w : t.weights) w /= sum;
    taps[size_t(i)] = std::move(t);
  }
  return taps;
}

std::vector<uint16_t> resample_plane(const std::vector<uint16_t>& plane, int width, int height,
                                     const ResampleJob& job, int max_value) {
  job.validate();
  if (width != job.src_width || height != job.src_height)
    throw ValidationError("plane dimensions do not match the resample job source");
  if (int64_t(plane.size()) != int64_t(width) * height)
    throw ValidationError("plane size does not match its dimensions");

  const auto htaps = compute_taps(job.src_width, job.dst_width, job.filter);
  const auto vtaps = compute_taps(job.src_height, job.dst_height, job.filter);

  // Horizontal pass into a double intermediate; the only rounding happens
  // after the vertical pass.
  std::vector<double> mid(size_t(job.dst_width) * size_t(height));
  for (int y = 0; y < height; ++y) {
    const uint16_t* row = plane.data() + size_t(y) * size_t(width);
    for (int x = 0; x < job.dst_width; ++x) {
      const FilterTaps& t = htaps[size_t(x)];
      double acc = 0.0;
      for (size_t k = 0; k < t.weights.size(); ++k) {
        int64_t sx = std::clamp<int64_t>(t.first_index + int64_t(k), 0, width - 1);
        acc += t.weights[k] * double(row[sx]);
      }
      mid[size_t(y) * size_t(job.dst_width) + size_t(x)] = acc;
    }
  }

  std::vector<uint16_t> out(size_t(job.dst_width) * size_t(job.dst_height));
  for (int y = 0; y < job.dst_height; ++y) {
    const FilterTaps& t = vtaps[size_t(y)];
    for (int x = 0; x < job.dst_width; ++x) {
      double acc = 0.0;
      for (size_t k = 0; k < t.weights.size(); ++k) {
        int64_t sy = std::clamp<int64_t>(t.first_index + int64_t(k), 0, height - 1);
        acc += t.weights[k] * mid[size_t(sy) * size_t(job.dst_width) + size_t(x)];
      }
      out[size_t(y) * size_t(job.dst_width) + size_t(x)] = finalize_sample(acc, max_value);
    }
  }
  return out;
}

FrameBuffer resample_frame(const FrameBuffer& frame, int dst_width, int dst_height,
                           const FilterKind& filter) {
  if (dst_width <= 0 || dst_height <= 0)
    throw ValidationError("resample target dimensions must be positive");
  if (frame.spec.chroma == Chroma::C420 && (dst_width % 2 != 0 || dst_height % 2 != 0))
    throw ValidationError("4:2:0 output requires even target dimensions, got " +
                          std::to_string(dst_width) + "x" + std::to_string(dst_height));

  VideoSpec out_spec = frame.spec;
  out_spec.width = dst_width;
  out_spec.height = dst_height;

  FrameBuffer out(out_spec);
  const int maxv = frame.spec.max_value();
  ResampleJob luma{frame.spec.width, frame.spec.height, dst_width, dst_height, filter};
  out.y = resample_plane(frame.y, frame.spec.width, frame.spec.height, luma, maxv);
  ResampleJob chroma{frame.spec.chroma_width(), frame.spec.chroma_height(),
                     out_spec.chroma_width(), out_spec.chroma_height(), filter};
  out.cb = resample_plane(frame.cb, chroma.src_width, chroma.src_height, chroma, maxv);
  out.cr = resample_plane(frame.cr, chroma.src_width, chroma.src_height, chroma, maxv);
  return out;
}

}  // namespace rdbench
