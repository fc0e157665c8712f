#pragma once

#include <string>
#include <vector>

#include "rdbench/video.hpp"

namespace rdbench {

// Separable interpolation kernel. Lanczos carries its taps parameter a (>= 1),
// bicubic its sharpness coefficient a in [-1, 0].
struct FilterKind {
  enum class Family { Lanczos, Bicubic };
  Family family = Family::Lanczos;
  double param = 3.0;

  static FilterKind lanczos(int a = 3);
  static FilterKind bicubic(double a = -0.5);
  // Accepts "lanczos", "lanczos:3", "bicubic", "bicubic:-0.5".
  static FilterKind parse(const std::string& text);

  double radius() const { return family == Family::Lanczos ? param : 2.0; }
  double weight(double x) const;
  std::string describe() const;
};

// L(x) = sinc(x) * sinc(x/a) for |x| < a, else 0; exact 1 at 0 and exact 0 at
// the other integers.
double lanczos_weight(double x, int a);

// Two-piece Keys cubic; interpolating (zero at nonzero integers), exact 1 at 0.
double bicubic_weight(double x, double a);

struct ResampleJob {
  int src_width = 0;
  int src_height = 0;
  int dst_width = 0;
  int dst_height = 0;
  FilterKind filter;

  void validate() const;
};

// Contribution window of one output coordinate: source indices
// first_index..first_index+weights.size()-1 (clamped into range at use) with
// weights normalized to sum 1.
struct FilterTaps {
  int64_t first_index = 0;
  std::vector<double> weights;
};

// Tap table for one axis under the pixel-center alignment convention
// src = (dst + 0.5) * (src_size / dst_size) - 0.5, clamp boundary handling.
std::vector<FilterTaps> compute_taps(int src_size, int dst_size, const FilterKind& filter);

// Separable two-pass resample (horizontal, then vertical). All intermediate
// arithmetic in double; one final round (half away from zero) and clip to
// [0, max_value].
std::vector<uint16_t> resample_plane(const std::vector<uint16_t>& plane, int width, int height,
                                     const ResampleJob& job, int max_value);

// All three planes with the same filter and alignment; chroma planes use the
// same scale factors on their own dimensions.
FrameBuffer resample_frame(const FrameBuffer& frame, int dst_width, int dst_height,
                           const FilterKind& filter);

}  // namespace rdbench
