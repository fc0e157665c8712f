#include "rdbench/metrics.hpp"

#include <array>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "rdbench/error.hpp"

namespace rdbench {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr int kWin = 11;
constexpr double kSigma = 1.5;

// Normalized 1-D Gaussian; the 2-D window is its outer product.
const std::array<double, kWin>& gaussian_taps() {
  static const std::array<double, kWin> taps = [] {
    std::array<double, kWin> t{};
    double sum = 0.0;
    for (int i = 0; i < kWin; ++i) {
      double d = double(i - kWin / 2);
      t[size_t(i)] = std::exp(-(d * d) / (2.0 * kSigma * kSigma));
      sum += t[size_t(i)];
    }
    for (double& v : t) v /= sum;
    return t;
  }();
  return taps;
}

void require_same_spec(const FrameBuffer& ref, const FrameBuffer& test) {
  if (!ref.spec.same_geometry(test.spec))
    throw ValidationError("metric inputs must share geometry and bit depth");
}

double population_std(double sum, double sumsq, int64_t n) {
  double mean = sum / double(n);
  double var = sumsq / double(n) - mean * mean;
  return std::sqrt(std::max(var, 0.0));
}

}  // namespace

double psnr_from_mse(double mse, int max_value) {
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  double maxv = double(max_value);
  return 10.0 * std::log10(maxv * maxv / mse);
}

double mse_y(const FrameBuffer& ref, const FrameBuffer& test) {
  require_same_spec(ref, test);
  int64_t acc = 0;
  const size_t n = ref.y.size();
  for (size_t i = 0; i < n; ++i) {
    int64_t d = int64_t(ref.y[i]) - int64_t(test.y[i]);
    acc += d * d;
  }
  return double(acc) / double(n);
}

double psnr_y(const FrameBuffer& ref, const FrameBuffer& test) {
  return psnr_from_mse(mse_y(ref, test), ref.spec.max_value());
}

double ssim_y(const FrameBuffer& ref, const FrameBuffer& test) {
  require_same_spec(ref, test);
  const int w = ref.spec.width;
  const int h = ref.spec.height;
  if (w < kWin || h < kWin)
    throw ValidationError("ssim needs at least " + std::to_string(kWin) + "x" +
                          std::to_string(kWin) + " luma");

  const double L = double(ref.spec.max_value());
  const double c1 = (0.01 * L) * (0.01 * L);
  const double c2 = (0.03 * L) * (0.03 * L);
  const auto& g = gaussian_taps();

  const int out_w = w - kWin + 1;
  const int out_h = h - kWin + 1;

  // Horizontal Gaussian pass over x, y, x^2, y^2, xy, held in a ring of kWin
  // rows; the vertical pass then completes the window sums.
  struct Row {
    std::vector<double> mx, my, mxx, myy, mxy;
  };
  std::vector<Row> ring(kWin);
  for (auto& r : ring) {
    r.mx.resize(size_t(out_w));
    r.my.resize(size_t(out_w));
    r.mxx.resize(size_t(out_w));
    r.myy.resize(size_t(out_w));
    r.mxy.resize(size_t(out_w));
  }

  auto fill_row = [&](int sy) {
    Row& r = ring[size_t(sy % kWin)];
    const uint16_t* xr = ref.y.data() + size_t(sy) * size_t(w);
    const uint16_t* yr = test.y.data() + size_t(sy) * size_t(w);
    for (int ox = 0; ox < out_w; ++ox) {
      double sx = 0, sy2 = 0, sxx = 0, syy = 0, sxy = 0;
      for (int k = 0; k < kWin; ++k) {
        double a = double(xr[ox + k]);
        double b = double(yr[ox + k]);
        double wk = g[size_t(k)];
        sx += wk * a;
        sy2 += wk * b;
        sxx += wk * a * a;
        syy += wk * b * b;
        sxy += wk * a * b;
      }
      r.mx[size_t(ox)] = sx;
      r.my[size_t(ox)] = sy2;
      r.mxx[size_t(ox)] = sxx;
      r.myy[size_t(ox)] = syy;
      r.mxy[size_t(ox)] = sxy;
    }
  };

  for (int sy = 0; sy < kWin - 1; ++sy) fill_row(sy);

  double total = 0.0;
  for (int oy = 0; oy < out_h; ++oy) {
    fill_row(oy + kWin - 1);
    for (int ox = 0; ox < out_w; ++ox) {
      double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
      for (int k = 0; k < kWin; ++k) {
        const Row& r = ring[size_t((oy + k) % kWin)];
        double wk = g[size_t(k)];
        mx += wk * r.mx[size_t(ox)];
        my += wk * r.my[size_t(ox)];
        mxx += wk * r.mxx[size_t(ox)];
        myy += wk * r.myy[size_t(ox)];
        mxy += wk * r.mxy[size_t(ox)];
      }
      double var_x = mxx - mx * mx;
      double var_y = myy - my * my;
      double cov = mxy - mx * my;
      double num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
      double den = (mx * mx + my * my + c1) * (var_x + var_y + c2);
      total += num / den;
    }
  }
  return total / (double(out_w) * double(out_h));
}

FrameScore score_frame(int64_t index, const FrameBuffer& ref, const FrameBuffer& test,
                       bool with_ssim) {
  FrameScore s;
  s.index = index;
  s.mse_y = mse_y(ref, test);
  s.psnr_y = psnr_from_mse(s.mse_y, ref.spec.max_value());
  s.ssim = with_ssim ? ssim_y(ref, test) : 0.0;
  return s;
}

SequenceScore score_sequence(VideoReader& ref, VideoReader& test, PsnrAggregation mode,
                             bool with_ssim) {
  if (ref.spec().frame_count != test.spec().frame_count)
    throw ValidationError("sequences differ in frame count (" +
                          std::to_string(ref.spec().frame_count) + " vs " +
                          std::to_string(test.spec().frame_count) + ")");
  if (!ref.spec().same_geometry(test.spec()))
    throw ValidationError("sequences differ in geometry or bit depth");
  const int64_t n = ref.spec().frame_count;
  if (n == 0) throw ValidationError("cannot score zero-length streams");

  SequenceScore score;
  score.mode = mode;
  score.per_frame.reserve(size_t(n));
  double psnr_sum = 0.0, mse_sum = 0.0, ssim_sum = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    FrameBuffer a = ref.read_frame(i);
    FrameBuffer b = test.read_frame(i);
    FrameScore s = score_frame(i, a, b, with_ssim);
    psnr_sum += s.psnr_y;
    mse_sum += s.mse_y;
    ssim_sum += s.ssim;
    score.per_frame.push_back(s);
  }
  score.psnr_y_mean = psnr_sum / double(n);
  score.psnr_y_of_mean_mse = psnr_from_mse(mse_sum / double(n), ref.spec().max_value());
  score.ssim_mean = ssim_sum / double(n);
  return score;
}

namespace {

std::vector<double> scaled_luma(const FrameBuffer& f) {
  std::vector<double> out(f.y.size());
  const double scale = f.spec.bit_depth == 10 ? 0.25 : 1.0;
  for (size_t i = 0; i < f.y.size(); ++i) out[i] = double(f.y[i]) * scale;
  return out;
}

double frame_si(const std::vector<double>& luma, int w, int h) {
  if (w < 3 || h < 3) throw ValidationError("SI needs at least 3x3 luma");
  double sum = 0.0, sumsq = 0.0;
  for (int y = 1; y < h - 1; ++y) {
    const double* r0 = luma.data() + size_t(y - 1) * size_t(w);
    const double* r1 = luma.data() + size_t(y) * size_t(w);
    const double* r2 = luma.data() + size_t(y + 1) * size_t(w);
    for (int x = 1; x < w - 1; ++x) {
      double gx = (r0[x + 1] + 2.0 * r1[x + 1] + r2[x + 1]) -
                  (r0[x - 1] + 2.0 * r1[x - 1] + r2[x - 1]);
      double gy = (r2[x - 1] + 2.0 * r2[x] + r2[x + 1]) -
                  (r0[x - 1] + 2.0 * r0[x] + r0[x + 1]);
      double mag = std::sqrt(gx * gx + gy * gy);
      sum += mag;
      sumsq += mag * mag;
    }
  }
  return population_std(sum, sumsq, int64_t(w - 2) * int64_t(h - 2));
}

double frame_ti(const std::vector<double>& cur, const std::vector<double>& prev) {
  double sum = 0.0, sumsq = 0.0;
  for (size_t i = 0; i < cur.size(); ++i) {
    double d = cur[i] - prev[i];
    sum += d;
    sumsq += d * d;
  }
  return population_std(sum, sumsq, int64_t(cur.size()));
}

template <typename FrameAt>
SiTiResult si_ti_impl(int64_t count, int w, int h, FrameAt frame_at) {
  if (count < 1) throw ValidationError("SI/TI needs at least one frame");
  SiTiResult r;
  std::vector<double> prev;
  for (int64_t i = 0; i < count; ++i) {
    std::vector<double> luma = frame_at(i);
    r.per_frame_si.push_back(frame_si(luma, w, h));
    if (i > 0) r.per_frame_ti.push_back(frame_ti(luma, prev));
    prev = std::move(luma);
  }
  r.si = *std::max_element(r.per_frame_si.begin(), r.per_frame_si.end());
  if (!r.per_frame_ti.empty())
    r.ti = *std::max_element(r.per_frame_ti.begin(), r.per_frame_ti.end());
  return r;
}

}  // namespace

SiTiResult si_ti(VideoReader& video) {
  const auto& spec = video.spec();
  return si_ti_impl(spec.frame_count, spec.width, spec.height,
                    [&](int64_t i) { return scaled_luma(video.read_frame(i)); });
}

SiTiResult si_ti_frames(std::span<const FrameBuffer> frames) {
  if (frames.empty()) throw ValidationError("SI/TI needs at least one frame");
  return si_ti_impl(int64_t(frames.size()), frames[0].spec.width, frames[0].spec.height,
                    [&](int64_t i) { return scaled_luma(frames[size_t(i)]); });
}

namespace {

ordered_json json_psnr(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

ordered_json spec_json(const VideoSpec& spec) {
  return ordered_json{{"width", spec.width},
                      {"height", spec.height},
                      {"bit_depth", spec.bit_depth},
                      {"chroma", to_string(spec.chroma)},
                      {"fps_num", spec.fps_num},
                      {"fps_den", spec.fps_den},
                      {"frame_count", spec.frame_count}};
}

}  // namespace

std::string sequence_score_to_json(const SequenceScore& score, const VideoSpec& spec) {
  ordered_json j;
  j["spec"] = spec_json(spec);
  auto& frames = j["per_frame"] = ordered_json::array();
  for (const auto& s : score.per_frame)
    frames.push_back(ordered_json{{"index", s.index},
                                  {"psnr_y", json_psnr(s.psnr_y)},
                                  {"ssim", s.ssim},
                                  {"mse_y", s.mse_y}});
  j["aggregates"] = ordered_json{
      {"psnr_y_mean", json_psnr(score.psnr_y_mean)},
      {"psnr_y_of_mean_mse", json_psnr(score.psnr_y_of_mean_mse)},
      {"ssim_mean", score.ssim_mean},
      {"aggregation_mode",
       score.mode == PsnrAggregation::MeanOfFramePsnr ? "mean-of-frame-psnr" : "psnr-of-mean-mse"},
  };
  return j.dump(2) + "\n";
}

std::string siti_to_json(const SiTiResult& result, const VideoSpec& spec) {
  ordered_json j;
  j["spec"] = spec_json(spec);
  j["si"] = result.si;
  if (result.ti)
    j["ti"] = *result.ti;
  else
    j["ti"] = nullptr;
  j["per_frame_si"] = result.per_frame_si;
  j["per_frame_ti"] = result.per_frame_ti;
  return j.dump(2) + "\n";
}

}  // namespace rdbench
