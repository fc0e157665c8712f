#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "rdbench/video.hpp"

namespace rdbench {

// Hermetic test codec: 8x8 blockwise integer cosine transform (exactly
// orthogonal integer basis), uniform quantization of the AC coefficients
// with step 2^((qp-4)/6), lossless DPCM-coded DC, signed exp-Golomb entropy
// coding. Deterministic across runs and platforms; decode(encode(x)) is
// bit-exact whenever the quantization step is <= 1 (qp <= 4), and constant
// frames survive any qp because their AC coefficients are exactly zero.
//
// This exists to produce realistically shaped monotone RD curves for
// integration tests, not to compress well.

constexpr int kMockQpMin = 0;
constexpr int kMockQpMax = 51;

double mock_quant_step(int qp);

std::vector<uint8_t> mock_encode(std::span<const FrameBuffer> frames, int qp);
std::vector<FrameBuffer> mock_decode(std::span<const uint8_t> bitstream);

// File-level wrappers used by the builtin tool adapters; input/output are
// Y4M (or raw with a sidecar-free Y4M requirement kept by callers). recon,
// when given, receives the decoded stream the same way a reference encoder
// emits its reconstruction.
void mock_encode_file(const std::filesystem::path& input_y4m, int qp,
                      const std::filesystem::path& bitstream_path,
                      const std::optional<std::filesystem::path>& recon_y4m);
void mock_decode_file(const std::filesystem::path& bitstream_path,
                      const std::filesystem::path& output_y4m);

// Layered stub: base layer = bicubic factor-2 downscale, enhancement layer =
// full resolution, two self-delimiting streams concatenated byte-for-byte.
// Decoding yields the enhancement (full-resolution) layer.
void mock_layered_encode_file(const std::filesystem::path& input_y4m, int qp,
                              const std::filesystem::path& bitstream_path);
void mock_layered_decode_file(const std::filesystem::path& bitstream_path,
                              const std::filesystem::path& output_y4m);

}  // namespace rdbench
