#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rdbench/media_io.hpp"
#include "rdbench/video.hpp"

namespace rdbench {

// Per-frame full-reference scores. psnr_y uses +infinity as the zero-error
// sentinel; downstream curve construction rejects such points.
struct FrameScore {
  int64_t index = 0;
  double psnr_y = 0.0;
  double ssim = 0.0;
  double mse_y = 0.0;
};

enum class PsnrAggregation { MeanOfFramePsnr, PsnrOfMeanMse };

struct SequenceScore {
  std::vector<FrameScore> per_frame;
  double psnr_y_mean = 0.0;          // arithmetic mean of per-frame PSNR
  double psnr_y_of_mean_mse = 0.0;   // 10*log10(MAX^2 / mean mse)
  double ssim_mean = 0.0;
  PsnrAggregation mode = PsnrAggregation::MeanOfFramePsnr;

  double aggregate_psnr() const {
    return mode == PsnrAggregation::MeanOfFramePsnr ? psnr_y_mean : psnr_y_of_mean_mse;
  }
};

// P.910-style content descriptors; ti is absent for single-frame input.
struct SiTiResult {
  double si = 0.0;
  std::optional<double> ti;
  std::vector<double> per_frame_si;
  std::vector<double> per_frame_ti;  // frame_count - 1 entries
};

double psnr_from_mse(double mse, int max_value);

// Mean squared error over luma only. Exact (integer accumulation).
double mse_y(const FrameBuffer& ref, const FrameBuffer& test);

double psnr_y(const FrameBuffer& ref, const FrameBuffer& test);

// Single-scale SSIM on luma: 11x11 Gaussian window, sigma 1.5,
// C1=(0.01*L)^2, C2=(0.03*L)^2, valid windows only, mean of the local map.
// Requires dims >= 11x11. Symmetric in ref/test.
double ssim_y(const FrameBuffer& ref, const FrameBuffer& test);

FrameScore score_frame(int64_t index, const FrameBuffer& ref, const FrameBuffer& test,
                       bool with_ssim = true);

SequenceScore score_sequence(VideoReader& ref, VideoReader& test,
                             PsnrAggregation mode = PsnrAggregation::MeanOfFramePsnr,
                             bool with_ssim = true);

// SI: population std of the 3x3 Sobel magnitude over interior luma pixels,
// per frame, maxed over frames. TI: population std of successive luma
// differences over all pixels. 10-bit luma is scaled to the 8-bit range.
SiTiResult si_ti(VideoReader& video);
SiTiResult si_ti_frames(std::span<const FrameBuffer> frames);

// Report JSON per the metrics CLI schema; infinite PSNR serializes as "inf".
std::string sequence_score_to_json(const SequenceScore& score, const VideoSpec& spec);
std::string siti_to_json(const SiTiResult& result, const VideoSpec& spec);

}  // namespace rdbench
