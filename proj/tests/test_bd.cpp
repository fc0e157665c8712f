#include <doctest.h>

#include <cmath>
#include <random>

#include "rdbench/bd.hpp"
#include "rdbench/error.hpp"

using namespace rdbench;

namespace {

RDCurve curve(const std::string& label, std::vector<std::pair<double, double>> pts,
              const std::string& metric = "psnr_y") {
  std::vector<RDPoint> points;
  for (auto [rate, score] : pts) points.push_back({rate, std::nullopt, {{metric, score}}});
  return RDCurve::create(label, std::move(points));
}

// The spec's synthetic 4-point pair.
const RDCurve kAnchor = curve("anchor", {{10, 40}, {20, 43}, {40, 46}, {80, 49}});
const RDCurve kTest = curve("test", {{9, 40}, {17, 43}, {33, 46}, {66, 49}});

// Dense trapezoid integration of an Interpolant; the implementation
// integrates in closed form, so agreement is a genuine cross-check.
double trapezoid_mean_diff(const Interpolant& fa, const Interpolant& ft, double lo, double hi,
                           int samples = 100001) {
  double acc = 0.0;
  double prev = ft.eval(lo) - fa.eval(lo);
  for (int i = 1; i < samples; ++i) {
    double x = lo + (hi - lo) * double(i) / double(samples - 1);
    double cur = ft.eval(x) - fa.eval(x);
    acc += 0.5 * (prev + cur);
    prev = cur;
  }
  return acc * ((hi - lo) / double(samples - 1)) / (hi - lo);
}

struct CurvePair {
  RDCurve anchor;
  RDCurve test;
};

// Random monotone 4-6 point pairs; regenerated until the metric ranges
// overlap so every pair is BD-computable.
CurvePair random_pair(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> npts(4, 6);
  std::uniform_real_distribution<double> jitter(0.8, 1.25);
  std::uniform_real_distribution<double> q0(30.0, 40.0);
  std::uniform_real_distribution<double> qstep(1.0, 4.0);
  std::uniform_real_distribution<double> r0(2.0, 12.0);
  auto make = [&](const std::string& label) {
    int n = npts(rng);
    std::vector<std::pair<double, double>> pts;
    double rate = r0(rng);
    double score = q0(rng);
    for (int i = 0; i < n; ++i) {
      pts.push_back({rate, score});
      rate *= 1.6 * jitter(rng);
      score += qstep(rng);
    }
    return curve(label, pts);
  };
  for (;;) {
    auto a = make("anchor");
    auto t = make("test");
    auto ax = a.metric_values("psnr_y");
    auto tx = t.metric_values("psnr_y");
    if (std::min(ax.back(), tx.back()) > std::max(ax.front(), tx.front()))
      return {std::move(a), std::move(t)};
  }
}

}  // namespace

TEST_CASE("identical curves give exact zeros") {
  for (auto mode : {InterpMode::MonotonePchip, InterpMode::CubicPoly}) {
    CHECK(bd_rate(kAnchor, kAnchor, "psnr_y", mode).value == 0.0);
    CHECK(bd_metric(kAnchor, kAnchor, "psnr_y", mode).value == 0.0);
  }
}

TEST_CASE("uniform 2x rate inflation is +100 percent") {
  std::vector<RDPoint> doubled;
  for (const auto& p : kAnchor.points)
    doubled.push_back({2.0 * p.bitrate_mbps, p.qp, p.metrics});
  auto test2x = RDCurve::create("2x", std::move(doubled));
  for (auto mode : {InterpMode::MonotonePchip, InterpMode::CubicPoly}) {
    auto r = bd_rate(kAnchor, test2x, "psnr_y", mode);
    CHECK(r.value == doctest::Approx(100.0).epsilon(1e-9));
  }
}

TEST_CASE("constant quality offset is returned exactly") {
  std::vector<RDPoint> lifted;
  for (const auto& p : kAnchor.points) {
    RDPoint q = p;
    q.metrics["psnr_y"] += 0.5;
    lifted.push_back(q);
  }
  auto up = RDCurve::create("up", std::move(lifted));
  for (auto mode : {InterpMode::MonotonePchip, InterpMode::CubicPoly}) {
    auto r = bd_metric(kAnchor, up, "psnr_y", mode);
    CHECK(std::fabs(r.value - 0.5) < 1e-9);
  }
}

TEST_CASE("synthetic pair golden values (frozen from the independent oracle)") {
  // Golden values computed before implementation with a scipy-PCHIP /
  // numpy-polyfit dense-trapezoid oracle (2,000,001 samples).
  auto rp = bd_rate(kAnchor, kTest, "psnr_y", InterpMode::MonotonePchip);
  CHECK(std::fabs(rp.value - (-15.6588758814)) < 0.05);
  auto rc = bd_rate(kAnchor, kTest, "psnr_y", InterpMode::CubicPoly);
  CHECK(std::fabs(rc.value - (-15.6588758814)) < 0.05);

  auto mp = bd_metric(kAnchor, kTest, "psnr_y", InterpMode::MonotonePchip);
  CHECK(std::fabs(mp.value - 0.7556779721) < 0.005);
  auto mc = bd_metric(kAnchor, kTest, "psnr_y", InterpMode::CubicPoly);
  CHECK(std::fabs(mc.value - 0.7556650663) < 0.005);

  auto ip = bd_metric_interval(kAnchor, kTest, "psnr_y", 15.0, 70.0, InterpMode::MonotonePchip);
  REQUIRE(ip.has_value());
  CHECK(std::fabs(ip->value - 0.8012564235) < 0.005);
  auto ic = bd_metric_interval(kAnchor, kTest, "psnr_y", 15.0, 70.0, InterpMode::CubicPoly);
  REQUIRE(ic.has_value());
  CHECK(std::fabs(ic->value - 0.8012332099) < 0.005);
}

TEST_CASE("pchip matches scipy slopes closely on the synthetic pair") {
  // Cross-check against the scipy PCHIP evaluation frozen at the knot span
  // midpoints (spot values, generous tolerance: the slope rule must match).
  auto x = kTest.metric_values("psnr_y");
  auto y = kTest.log10_bitrates();
  auto f = Interpolant::fit(x, y, InterpMode::MonotonePchip);
  // d/dx at the knots from scipy: [0.09009237, 0.0940037, 0.09813495, 0.10250416]
  // verify via finite differences of eval
  double h = 1e-6;
  auto deriv = [&](double v) { return (f.eval(v + h) - f.eval(v - h)) / (2 * h); };
  CHECK(deriv(43.0) == doctest::Approx(0.0940037).epsilon(1e-3));
  CHECK(deriv(46.0) == doctest::Approx(0.09813495).epsilon(1e-3));
}

TEST_CASE("interval variant returns the insufficient-data marker") {
  // Curves entirely inside 5-25 Mb/s, asked about 30-80 Mb/s: the measured
  // curves never reach the interval, so there is nothing to integrate.
  auto a = curve("a", {{5, 40}, {10, 42}, {18, 44}, {25, 46}});
  auto b = curve("b", {{6, 41}, {11, 43}, {19, 45}, {24, 47}});
  CHECK_FALSE(bd_metric_interval(a, b, "psnr_y", 30.0, 80.0).has_value());

  // Partial coverage clips the domain to what the curves actually reach.
  auto partial = bd_metric_interval(a, b, "psnr_y", 15.0, 80.0);
  REQUIRE(partial.has_value());
  CHECK(partial->overlap_lo == doctest::Approx(std::log10(15.0)).epsilon(1e-12));
  CHECK(partial->overlap_hi == doctest::Approx(std::log10(24.0)).epsilon(1e-12));

  // Open-ended interval normalizes against curve extrema.
  auto full = bd_metric_interval(a, b, "psnr_y", 0.0,
                                 std::numeric_limits<double>::infinity());
  REQUIRE(full.has_value());
  auto plain = bd_metric(a, b, "psnr_y");
  CHECK(full->value == doctest::Approx(plain.value).epsilon(1e-12));
}

TEST_CASE("interval covering the full overlap equals bd_metric within 1e-9") {
  double lo = std::max(kAnchor.points.front().bitrate_mbps, kTest.points.front().bitrate_mbps);
  double hi = std::min(kAnchor.points.back().bitrate_mbps, kTest.points.back().bitrate_mbps);
  auto iv = bd_metric_interval(kAnchor, kTest, "psnr_y", lo, hi);
  REQUIRE(iv.has_value());
  auto plain = bd_metric(kAnchor, kTest, "psnr_y");
  CHECK(std::fabs(iv->value - plain.value) < 1e-9);
}

TEST_CASE("interval validation") {
  CHECK_THROWS_AS(bd_metric_interval(kAnchor, kTest, "psnr_y", 30.0, 30.0), ValidationError);
  CHECK_THROWS_AS(bd_metric_interval(kAnchor, kTest, "psnr_y", -1.0, 30.0), ValidationError);
}

TEST_CASE("bd antisymmetry and reciprocal identities") {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 20; ++i) {
    auto [a, t] = random_pair(rng);
    for (auto mode : {InterpMode::MonotonePchip, InterpMode::CubicPoly}) {
      double ab = bd_metric(a, t, "psnr_y", mode).value;
      double ba = bd_metric(t, a, "psnr_y", mode).value;
      CHECK(std::fabs(ab + ba) < 1e-9);

      double rab = bd_rate(a, t, "psnr_y", mode).value;
      double rba = bd_rate(t, a, "psnr_y", mode).value;
      CHECK(std::fabs((1.0 + rab / 100.0) * (1.0 + rba / 100.0) - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("bd_rate is invariant to rate scaling and quality shifts") {
  std::mt19937_64 rng(43);
  for (int i = 0; i < 10; ++i) {
    auto [a, t] = random_pair(rng);
    double base = bd_rate(a, t, "psnr_y").value;

    auto scale_rates = [](const RDCurve& c, double k) {
      std::vector<RDPoint> pts;
      for (auto p : c.points) {
        p.bitrate_mbps *= k;
        pts.push_back(p);
      }
      return RDCurve::create(c.label + "_scaled", std::move(pts));
    };
    auto shift_quality = [](const RDCurve& c, double dq) {
      std::vector<RDPoint> pts;
      for (auto p : c.points) {
        p.metrics["psnr_y"] += dq;
        pts.push_back(p);
      }
      return RDCurve::create(c.label + "_shifted", std::move(pts));
    };
    CHECK(std::fabs(bd_rate(scale_rates(a, 3.7), scale_rates(t, 3.7), "psnr_y").value - base) <
          1e-9);
    CHECK(std::fabs(bd_rate(shift_quality(a, 2.5), shift_quality(t, 2.5), "psnr_y").value -
                    base) < 1e-9);
  }
}

TEST_CASE("closed-form integration matches the dense trapezoid oracle") {
  std::mt19937_64 rng(4242);
  for (int i = 0; i < 25; ++i) {
    auto [a, t] = random_pair(rng);
    for (auto mode : {InterpMode::MonotonePchip, InterpMode::CubicPoly}) {
      {
        auto ax = a.metric_values("psnr_y");
        auto ay = a.log10_bitrates();
        auto tx = t.metric_values("psnr_y");
        auto ty = t.log10_bitrates();
        double lo = std::max(ax.front(), tx.front());
        double hi = std::min(ax.back(), tx.back());
        if (!(hi > lo)) continue;
        auto fa = Interpolant::fit(ax, ay, mode);
        auto ft = Interpolant::fit(tx, ty, mode);
        double oracle_d = trapezoid_mean_diff(fa, ft, lo, hi);
        double impl = bd_rate(a, t, "psnr_y", mode).value;
        double oracle_rate = (std::pow(10.0, oracle_d) - 1.0) * 100.0;
        CHECK(std::fabs(impl - oracle_rate) < 1e-4);  // 1e-6 on d maps to ~1e-4 pp
      }
      {
        auto ax = a.log10_bitrates();
        auto ay = a.metric_values("psnr_y");
        auto tx = t.log10_bitrates();
        auto ty = t.metric_values("psnr_y");
        double lo = std::max(ax.front(), tx.front());
        double hi = std::min(ax.back(), tx.back());
        if (!(hi > lo)) continue;
        auto fa = Interpolant::fit(ax, ay, mode);
        auto ft = Interpolant::fit(tx, ty, mode);
        double oracle_d = trapezoid_mean_diff(fa, ft, lo, hi);
        double impl = bd_metric(a, t, "psnr_y", mode).value;
        CHECK(std::fabs(impl - oracle_d) < 1e-6);
      }
    }
  }
}

TEST_CASE("interpolant reproduces collinear data in both modes") {
  std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  std::vector<double> y{2.0, 4.0, 6.0, 8.0};
  for (auto mode : {InterpMode::MonotonePchip, InterpMode::CubicPoly}) {
    auto f = Interpolant::fit(x, y, mode);
    for (double v : {1.5, 2.5, 3.5}) CHECK(std::fabs(f.eval(v) - 2.0 * v) < 1e-9);
  }
}

TEST_CASE("cubic fit of y=x^3 recovers exact coefficients") {
  std::vector<double> x{1.0, 2.0, 3.0, 4.0, 5.0};
  std::vector<double> y;
  for (double v : x) y.push_back(v * v * v);
  auto f = Interpolant::fit(x, y, InterpMode::CubicPoly);
  auto c = f.poly_coefficients();
  CHECK(std::fabs(c[0]) < 1e-9);
  CHECK(std::fabs(c[1]) < 1e-9);
  CHECK(std::fabs(c[2]) < 1e-9);
  CHECK(std::fabs(c[3] - 1.0) < 1e-9);
}

TEST_CASE("monotone mode never overshoots between knots") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    auto [a, t] = random_pair(rng);
    auto x = a.log10_bitrates();
    auto y = a.metric_values("psnr_y");
    auto f = Interpolant::fit(x, y, InterpMode::MonotonePchip);
    for (size_t k = 0; k + 1 < x.size(); ++k)
      for (int s = 1; s < 16; ++s) {
        double v = x[k] + (x[k + 1] - x[k]) * double(s) / 16.0;
        double fv = f.eval(v);
        CHECK(fv >= y[k] - 1e-12);
        CHECK(fv <= y[k + 1] + 1e-12);
      }
  }
}

TEST_CASE("curve construction rejects bad input") {
  CHECK_THROWS_AS(curve("neg", {{-1, 40}, {2, 41}, {3, 42}, {4, 43}}), ValidationError);
  CHECK_THROWS_AS(curve("dup", {{2, 40}, {2, 41}, {3, 42}, {4, 43}}), ValidationError);

  std::vector<RDPoint> inf_pts{
      {1.0, std::nullopt, {{"psnr_y", std::numeric_limits<double>::infinity()}}}};
  CHECK_THROWS_AS(RDCurve::create("inf", std::move(inf_pts)), ValidationError);
}

TEST_CASE("bd validation rejects short, non-monotone, or disjoint curves") {
  auto three = curve("three", {{1, 40}, {2, 41}, {3, 42}});
  CHECK_THROWS_AS(bd_rate(three, three, "psnr_y"), ValidationError);

  auto wiggle = curve("wiggle", {{1, 40}, {2, 43}, {3, 42}, {4, 45}});
  auto good = curve("good", {{1, 40}, {2, 41}, {3, 42}, {4, 45}});
  CHECK_THROWS_AS(bd_rate(wiggle, good, "psnr_y"), ValidationError);
  CHECK_THROWS_AS(bd_metric(good, wiggle, "psnr_y"), ValidationError);

  auto lowq = curve("lowq", {{1, 10}, {2, 11}, {3, 12}, {4, 13}});
  CHECK_THROWS_AS(bd_rate(good, lowq, "psnr_y"), ValidationError);

  CHECK_THROWS_AS(bd_rate(good, good, "vmaf"), ValidationError);  // metric absent
}

TEST_CASE("curve json round trip") {
  std::vector<RDPoint> pts;
  pts.push_back({10.5, 22, {{"psnr_y", 41.25}, {"ssim", 0.97}}});
  pts.push_back({21.0, 17, {{"psnr_y", 44.5}, {"ssim", 0.985}}});
  pts.push_back({42.0, std::nullopt, {{"psnr_y", 46.0}, {"ssim", 0.99}}});
  pts.push_back({84.0, 12, {{"psnr_y", 48.0}, {"ssim", 0.995}}});
  auto c = RDCurve::create("vvc_simulcast", std::move(pts));
  auto text = curve_to_json_text(c);
  auto back = curve_from_json_text(text);
  CHECK(back.label == c.label);
  REQUIRE(back.points.size() == 4);
  CHECK(back.points[0].bitrate_mbps == 10.5);
  CHECK(back.points[0].qp == 22);
  CHECK_FALSE(back.points[2].qp.has_value());
  CHECK(back.points[3].metrics.at("ssim") == 0.995);
  CHECK(curve_to_json_text(back) == text);  // stable re-serialization

  CHECK_THROWS_AS(curve_from_json_text("{"), ParseError);
  CHECK_THROWS_AS(curve_from_json_text("{\"label\":\"x\"}"), ParseError);
}

TEST_CASE("bd result json names its fields") {
  auto r = bd_rate(kAnchor, kTest, "psnr_y");
  auto text = bd_result_to_json(r);
  CHECK(text.find("bd_rate_percent") != std::string::npos);
  CHECK(text.find("\"interp\": \"pchip\"") != std::string::npos);
  CHECK(text.find("points_used") != std::string::npos);
}
