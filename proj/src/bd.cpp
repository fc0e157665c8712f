#include "rdbench/bd.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rdbench/error.hpp"

namespace rdbench {

namespace {

using ordered_json = nlohmann::ordered_json;

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// One-sided three-point slope estimate with shape preservation, as used at
// pchip endpoints.
double edge_slope(double h0, double h1, double d0, double d1) {
  double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
  if (sign(m) != sign(d0)) return 0.0;
  if (sign(d0) != sign(d1) && std::fabs(m) > 3.0 * std::fabs(d0)) return 3.0 * d0;
  return m;
}

// Fritsch-Carlson-Butland weighted harmonic mean for interior knots.
std::vector<double> pchip_slopes(std::span<const double> x, std::span<const double> y) {
  const size_t n = x.size();
  std::vector<double> h(n - 1), d(n - 1), m(n);
  for (size_t k = 0; k + 1 < n; ++k) {
    h[k] = x[k + 1] - x[k];
    d[k] = (y[k + 1] - y[k]) / h[k];
  }
  for (size_t k = 1; k + 1 < n; ++k) {
    if (d[k - 1] * d[k] <= 0.0) {
      m[k] = 0.0;
    } else {
      double w1 = 2.0 * h[k] + h[k - 1];
      double w2 = h[k] + 2.0 * h[k - 1];
      m[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
    }
  }
  m[0] = edge_slope(h[0], h[1], d[0], d[1]);
  m[n - 1] = edge_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
  return m;
}

// Least-squares cubic on centered abscissae via 4x4 normal equations.
std::array<double, 4> polyfit_cubic(std::span<const double> x, std::span<const double> y,
                                    double shift) {
  double a[4][5] = {};
  for (size_t i = 0; i < x.size(); ++i) {
    double t = x[i] - shift;
    double p[4] = {1.0, t, t * t, t * t * t};
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) a[r][c] += p[r] * p[c];
      a[r][4] += p[r] * y[i];
    }
  }
  // Gaussian elimination with partial pivoting.
  for (int col = 0; col < 4; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    if (a[pivot][col] == 0.0) throw ValidationError("degenerate cubic fit (singular system)");
    if (pivot != col)
      for (int c = 0; c < 5; ++c) std::swap(a[pivot][c], a[col][c]);
    for (int r = col + 1; r < 4; ++r) {
      double f = a[r][col] / a[col][col];
      for (int c = col; c < 5; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::array<double, 4> out{};
  for (int r = 3; r >= 0; --r) {
    double v = a[r][4];
    for (int c = r + 1; c < 4; ++c) v -= a[r][c] * out[size_t(c)];
    out[size_t(r)] = v / a[r][r];
  }
  return out;
}

double poly_antiderivative(const std::array<double, 4>& c, double t) {
  return t * (c[0] + t * (c[1] / 2.0 + t * (c[2] / 3.0 + t * c[3] / 4.0)));
}

}  // namespace

Interpolant Interpolant::fit(std::span<const double> x, std::span<const double> y,
                             InterpMode mode) {
  if (x.size() != y.size()) throw ValidationError("interpolant needs matching x/y lengths");
  if (x.size() < 4)
    throw ValidationError("interpolant needs at least 4 points, got " +
                          std::to_string(x.size()));
  for (size_t i = 0; i + 1 < x.size(); ++i) {
    if (x[i + 1] == x[i])
      throw ValidationError("duplicate abscissa " + std::to_string(x[i]) + " in interpolant");
    if (x[i + 1] < x[i]) throw ValidationError("interpolant abscissae must be increasing");
  }

  Interpolant f;
  f.mode_ = mode;
  f.x_.assign(x.begin(), x.end());
  if (mode == InterpMode::CubicPoly) {
    f.shift_ = 0.0;
    for (double v : x) f.shift_ += v;
    f.shift_ /= double(x.size());
    f.poly_ = polyfit_cubic(x, y, f.shift_);
  } else {
    auto m = pchip_slopes(x, y);
    f.seg_.resize(x.size() - 1);
    for (size_t k = 0; k + 1 < x.size(); ++k) {
      double h = x[k + 1] - x[k];
      double d = (y[k + 1] - y[k]) / h;
      f.seg_[k] = {y[k], m[k], (3.0 * d - 2.0 * m[k] - m[k + 1]) / h,
                   (m[k] + m[k + 1] - 2.0 * d) / (h * h)};
    }
  }
  return f;
}

std::array<double, 4> Interpolant::poly_coefficients() const {
  if (mode_ != InterpMode::CubicPoly)
    throw ValidationError("poly_coefficients is only defined for the cubic-poly mode");
  // Expand c0 + c1 (x-s) + c2 (x-s)^2 + c3 (x-s)^3 into powers of x.
  const double s = shift_;
  const auto& c = poly_;
  std::array<double, 4> out{};
  out[3] = c[3];
  out[2] = c[2] - 3.0 * c[3] * s;
  out[1] = c[1] - 2.0 * c[2] * s + 3.0 * c[3] * s * s;
  out[0] = c[0] - c[1] * s + c[2] * s * s - c[3] * s * s * s;
  return out;
}

size_t Interpolant::segment_for(double v) const {
  auto it = std::upper_bound(x_.begin(), x_.end(), v);
  size_t idx = size_t(it - x_.begin());
  if (idx == 0) return 0;
  if (idx >= x_.size()) return x_.size() - 2;
  return idx - 1;
}

double Interpolant::eval(double v) const {
  if (mode_ == InterpMode::CubicPoly) {
    double t = v - shift_;
    return poly_[0] + t * (poly_[1] + t * (poly_[2] + t * poly_[3]));
  }
  size_t k = segment_for(v);
  double s = v - x_[k];
  const auto& c = seg_[k];
  return c[0] + s * (c[1] + s * (c[2] + s * c[3]));
}

double Interpolant::integrate(double a, double b) const {
  const double tol = 1e-9 * std::max(1.0, std::fabs(x_.back() - x_.front()));
  if (a < x_.front() - tol || b > x_.back() + tol || a > b)
    throw ValidationError("integration bounds outside the fitted range");
  a = std::clamp(a, x_.front(), x_.back());
  b = std::clamp(b, x_.front(), x_.back());

  if (mode_ == InterpMode::CubicPoly) {
    std::array<double, 4> c{poly_[0], poly_[1], poly_[2], poly_[3]};
    return poly_antiderivative(c, b - shift_) - poly_antiderivative(c, a - shift_);
  }

  // Piecewise closed form: full interior segments plus clipped end pieces.
  size_t ka = segment_for(a);
  size_t kb = segment_for(b);
  double total = 0.0;
  for (size_t k = ka; k <= kb; ++k) {
    double lo = std::max(a, x_[k]);
    double hi = std::min(b, x_[k + 1]);
    if (hi <= lo) continue;
    total += poly_antiderivative(seg_[k], hi - x_[k]) - poly_antiderivative(seg_[k], lo - x_[k]);
  }
  return total;
}

InterpMode parse_interp_mode(const std::string& text) {
  if (text == "poly") return InterpMode::CubicPoly;
  if (text == "pchip") return InterpMode::MonotonePchip;
  throw ValidationError("unknown interpolation mode '" + text + "' (expected poly or pchip)");
}

std::string to_string(InterpMode mode) {
  return mode == InterpMode::CubicPoly ? "poly" : "pchip";
}

RDCurve RDCurve::create(std::string label, std::vector<RDPoint> points) {
  for (const auto& p : points) {
    if (!(p.bitrate_mbps > 0.0))
      throw ValidationError("curve '" + label + "' has a non-positive bitrate");
    for (const auto& [name, value] : p.metrics)
      if (!std::isfinite(value))
        throw ValidationError("curve '" + label + "' has a non-finite " + name +
                              " score; points with infinite PSNR cannot enter BD analysis");
  }
  std::sort(points.begin(), points.end(),
            [](const RDPoint& a, const RDPoint& b) { return a.bitrate_mbps < b.bitrate_mbps; });
  for (size_t i = 0; i + 1 < points.size(); ++i)
    if (points[i + 1].bitrate_mbps == points[i].bitrate_mbps)
      throw ValidationError("curve '" + label + "' has duplicate bitrates");
  RDCurve c;
  c.label = std::move(label);
  c.points = std::move(points);
  return c;
}

std::vector<double> RDCurve::metric_values(const std::string& metric) const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    auto it = p.metrics.find(metric);
    if (it == p.metrics.end())
      throw ValidationError("curve '" + label + "' lacks metric '" + metric + "'");
    out.push_back(it->second);
  }
  return out;
}

std::vector<double> RDCurve::log10_bitrates() const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(std::log10(p.bitrate_mbps));
  return out;
}

namespace {

void require_bd_curve(const RDCurve& curve, const std::string& metric) {
  if (curve.points.size() < 4)
    throw ValidationError("curve '" + curve.label + "' has " +
                          std::to_string(curve.points.size()) +
                          " points; BD analysis needs at least 4");
  auto scores = curve.metric_values(metric);
  for (size_t i = 0; i + 1 < scores.size(); ++i)
    if (scores[i + 1] <= scores[i])
      throw ValidationError("curve '" + curve.label + "': metric '" + metric +
                            "' is not strictly increasing with bitrate; BD analysis "
                            "requires monotone curves");
}

}  // namespace

BDResult bd_rate(const RDCurve& anchor, const RDCurve& test, const std::string& metric,
                 InterpMode mode) {
  require_bd_curve(anchor, metric);
  require_bd_curve(test, metric);
  auto ax = anchor.metric_values(metric);
  auto ay = anchor.log10_bitrates();
  auto tx = test.metric_values(metric);
  auto ty = test.log10_bitrates();
  double lo = std::max(ax.front(), tx.front());
  double hi = std::min(ax.back(), tx.back());
  if (!(hi > lo))
    throw ValidationError("metric ranges of '" + anchor.label + "' and '" + test.label +
                          "' do not overlap");
  auto fa = Interpolant::fit(ax, ay, mode);
  auto ft = Interpolant::fit(tx, ty, mode);
  double d = (ft.integrate(lo, hi) - fa.integrate(lo, hi)) / (hi - lo);
  BDResult r;
  r.kind = BDResult::Kind::RatePercent;
  r.value = (std::pow(10.0, d) - 1.0) * 100.0;
  r.overlap_lo = lo;
  r.overlap_hi = hi;
  r.interp = mode;
  r.points_anchor = int(anchor.points.size());
  r.points_test = int(test.points.size());
  return r;
}

namespace {

// Shared by bd_metric and its interval variant; integration domain is the
// intersection of both curves' log-rate ranges, further clipped by the caller.
std::optional<BDResult> bd_metric_clipped(const RDCurve& anchor, const RDCurve& test,
                                          const std::string& metric, InterpMode mode,
                                          std::optional<double> clip_lo,
                                          std::optional<double> clip_hi, bool marker_on_empty) {
  require_bd_curve(anchor, metric);
  require_bd_curve(test, metric);
  auto ax = anchor.log10_bitrates();
  auto ay = anchor.metric_values(metric);
  auto tx = test.log10_bitrates();
  auto ty = test.metric_values(metric);
  double lo = std::max(ax.front(), tx.front());
  double hi = std::min(ax.back(), tx.back());
  if (clip_lo) lo = std::max(lo, *clip_lo);
  if (clip_hi) hi = std::min(hi, *clip_hi);
  if (!(hi > lo)) {
    if (marker_on_empty) return std::nullopt;
    throw ValidationError("log-rate ranges of '" + anchor.label + "' and '" + test.label +
                          "' do not overlap");
  }
  auto fa = Interpolant::fit(ax, ay, mode);
  auto ft = Interpolant::fit(tx, ty, mode);
  BDResult r;
  r.kind = BDResult::Kind::MetricDelta;
  r.value = (ft.integrate(lo, hi) - fa.integrate(lo, hi)) / (hi - lo);
  r.overlap_lo = lo;
  r.overlap_hi = hi;
  r.interp = mode;
  r.points_anchor = int(anchor.points.size());
  r.points_test = int(test.points.size());
  return r;
}

}  // namespace

BDResult bd_metric(const RDCurve& anchor, const RDCurve& test, const std::string& metric,
                   InterpMode mode) {
  return *bd_metric_clipped(anchor, test, metric, mode, std::nullopt, std::nullopt, false);
}

std::optional<BDResult> bd_metric_interval(const RDCurve& anchor, const RDCurve& test,
                                           const std::string& metric, double lo_mbps,
                                           double hi_mbps, InterpMode mode) {
  if (lo_mbps < 0.0 || hi_mbps < 0.0 || !(lo_mbps < hi_mbps))
    throw ValidationError("bitrate interval must satisfy 0 <= low < high");
  // Each curve still needs >= 4 points overall (enforced by the fit); the
  // insufficient-data marker covers intervals the measured curves do not
  // reach, i.e. an empty clipped integration domain.
  std::optional<double> clip_lo, clip_hi;
  if (lo_mbps > 0.0) clip_lo = std::log10(lo_mbps);
  if (std::isfinite(hi_mbps)) clip_hi = std::log10(hi_mbps);
  return bd_metric_clipped(anchor, test, metric, mode, clip_lo, clip_hi, true);
}

RDCurve curve_from_json_text(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("malformed curve JSON: ") + e.what());
  }
  if (!j.contains("label") || !j.contains("points"))
    throw ParseError("curve JSON must carry 'label' and 'points'");
  std::vector<RDPoint> points;
  for (const auto& pj : j.at("points")) {
    RDPoint p;
    if (!pj.contains("bitrate_mbps")) throw ParseError("curve point lacks 'bitrate_mbps'");
    p.bitrate_mbps = pj.at("bitrate_mbps").get<double>();
    if (pj.contains("qp") && !pj.at("qp").is_null()) p.qp = pj.at("qp").get<int>();
    if (pj.contains("metrics"))
      for (const auto& [name, v] : pj.at("metrics").items()) {
        if (v.is_null()) continue;
        p.metrics[name] = v.get<double>();
      }
    points.push_back(std::move(p));
  }
  return RDCurve::create(j.at("label").get<std::string>(), std::move(points));
}

RDCurve curve_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open curve file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return curve_from_json_text(ss.str());
  } catch (const ParseError& e) {
    throw ParseError("'" + path + "': " + e.what());
  }
}

std::string curve_to_json_text(const RDCurve& curve) {
  ordered_json j;
  j["label"] = curve.label;
  auto& pts = j["points"] = ordered_json::array();
  for (const auto& p : curve.points) {
    ordered_json pj;
    pj["bitrate_mbps"] = p.bitrate_mbps;
    if (p.qp)
      pj["qp"] = *p.qp;
    else
      pj["qp"] = nullptr;
    ordered_json mj;
    for (const auto& [name, v] : p.metrics) mj[name] = v;
    pj["metrics"] = std::move(mj);
    pts.push_back(std::move(pj));
  }
  return j.dump(2) + "\n";
}

std::string bd_result_to_json(const BDResult& r) {
  ordered_json j;
  j["kind"] = r.kind == BDResult::Kind::RatePercent ? "bd_rate_percent" : "bd_metric_delta";
  j["value"] = r.value;
  j["overlap"] = ordered_json::array({r.overlap_lo, r.overlap_hi});
  j["interp"] = to_string(r.interp);
  j["points_used"] = ordered_json{{"anchor", r.points_anchor}, {"test", r.points_test}};
  return j.dump(2) + "\n";
}

}  // namespace rdbench
