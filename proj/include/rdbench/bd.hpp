#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rdbench {

// One rate-distortion operating point. Bitrate in Mb/s; metric scores keyed
// by name ("psnr_y", "ssim", "vmaf", ...). All scores must be finite: a point
// with infinite PSNR cannot participate in BD fitting.
struct RDPoint {
  double bitrate_mbps = 0.0;
  std::optional<int> qp;
  std::map<std::string, double> metrics;
};

// Labeled curve, points sorted by strictly increasing bitrate. Construction
// enforces positivity, finiteness, and the sort; per-metric monotonicity is
// checked when a metric is fitted.
struct RDCurve {
  std::string label;
  std::vector<RDPoint> points;

  static RDCurve create(std::string label, std::vector<RDPoint> points);

  // Scores for one metric in point order; throws if any point lacks it.
  std::vector<double> metric_values(const std::string& metric) const;
  std::vector<double> log10_bitrates() const;
};

enum class InterpMode { CubicPoly, MonotonePchip };

InterpMode parse_interp_mode(const std::string& text);  // "poly" | "pchip"
std::string to_string(InterpMode mode);

struct BDResult {
  enum class Kind { RatePercent, MetricDelta };
  Kind kind = Kind::RatePercent;
  double value = 0.0;
  // Integration interval: metric units for BD-rate, log10(Mb/s) for BD-metric.
  double overlap_lo = 0.0;
  double overlap_hi = 0.0;
  InterpMode interp = InterpMode::MonotonePchip;
  int points_anchor = 0;
  int points_test = 0;
};

// Evaluable fitted 1-D interpolant over strictly increasing x (>= 4 points).
// CubicPoly: least-squares cubic over all points. MonotonePchip: piecewise
// cubic Hermite with monotonicity-preserving (Fritsch-Carlson-Butland)
// slopes; interpolates every knot without overshoot between knots.
class Interpolant {
 public:
  static Interpolant fit(std::span<const double> x, std::span<const double> y, InterpMode mode);

  double eval(double x) const;
  // Closed-form integral over [a, b]; both bounds must lie inside the knot range.
  double integrate(double a, double b) const;
  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }
  // Cubic coefficients in ascending powers of x; CubicPoly mode only.
  std::array<double, 4> poly_coefficients() const;

 private:
  Interpolant() = default;
  size_t segment_for(double v) const;

  InterpMode mode_ = InterpMode::MonotonePchip;
  std::vector<double> x_;
  double shift_ = 0.0;                      // centering offset for the cubic fit
  std::array<double, 4> poly_{};            // centered cubic coefficients, ascending power
  std::vector<std::array<double, 4>> seg_;  // pchip per-segment power basis in (x - x_k)
};

// Average log10-bitrate difference at equal quality, as a percentage.
// Negative: `test` needs less rate than `anchor` for the same quality.
BDResult bd_rate(const RDCurve& anchor, const RDCurve& test, const std::string& metric,
                 InterpMode mode = InterpMode::MonotonePchip);

// Average quality difference at equal rate, in metric units. Positive: `test`
// scores higher than `anchor` at the same bitrate.
BDResult bd_metric(const RDCurve& anchor, const RDCurve& test, const std::string& metric,
                   InterpMode mode = InterpMode::MonotonePchip);

// BD-metric restricted to a bitrate interval [lo, hi] in Mb/s (0 and +inf
// accepted as open ends). Returns nullopt — the insufficient-data marker —
// when either curve has fewer than 4 points inside the interval or the
// clipped integration domain is degenerate.
std::optional<BDResult> bd_metric_interval(const RDCurve& anchor, const RDCurve& test,
                                           const std::string& metric, double lo_mbps,
                                           double hi_mbps,
                                           InterpMode mode = InterpMode::MonotonePchip);

// Curve JSON schema: {label, points:[{bitrate_mbps, qp, metrics:{...}}]}.
RDCurve curve_from_json_text(const std::string& text);
RDCurve curve_from_json_file(const std::string& path);
std::string curve_to_json_text(const RDCurve& curve);

std::string bd_result_to_json(const BDResult& result);

}  // namespace rdbench
