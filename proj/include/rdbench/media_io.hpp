#pragma once

#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "rdbench/video.hpp"

namespace rdbench {

enum class Container { Raw, Y4M };

// Caller-supplied description of a headerless raw stream. No guessing from
// file names: raw input is unusable without one of these.
struct RawFormat {
  int width = 0;
  int height = 0;
  int bit_depth = 8;
  int64_t fps_num = 0;
  int64_t fps_den = 1;
};

// Frame-at-a-time reader over a raw or Y4M file. One handle per consumer;
// clone() makes an independent handle for concurrent access to the same file.
class VideoReader {
 public:
  // Opens a Y4M file (identified by its magic header).
  static VideoReader open_y4m(const std::filesystem::path& path);
  // Opens a raw planar file with an explicit format; frame count is derived
  // from the file size, which must divide evenly.
  static VideoReader open_raw(const std::filesystem::path& path, const RawFormat& fmt);
  // Dispatches on the Y4M magic; raw files require fmt.
  static VideoReader open(const std::filesystem::path& path,
                          const std::optional<RawFormat>& fmt = std::nullopt);

  const VideoSpec& spec() const { return spec_; }
  const std::filesystem::path& path() const { return path_; }

  // Random access; bounds-checked. 10-bit samples are little-endian 16-bit
  // words and are rejected if they exceed 2^bit_depth - 1.
  FrameBuffer read_frame(int64_t index);

  VideoReader clone() const;

 private:
  VideoReader() = default;
  void build_y4m_index();

  std::filesystem::path path_;
  VideoSpec spec_;
  Container container_ = Container::Raw;
  std::shared_ptr<std::FILE> file_;
  std::vector<int64_t> frame_offsets_;  // Y4M payload offsets
};

// Spec of a stream without reading frame data.
VideoSpec probe_stream(const std::filesystem::path& path,
                       const std::optional<RawFormat>& fmt = std::nullopt);

// Append-style writer; all frames must share the spec given at creation.
class VideoWriter {
 public:
  static VideoWriter create(const std::filesystem::path& path, const VideoSpec& spec,
                            Container container);
  void write_frame(const FrameBuffer& frame);
  int64_t frames_written() const { return frames_written_; }
  void close();

 private:
  VideoWriter() = default;
  std::filesystem::path path_;
  VideoSpec spec_;
  Container container_ = Container::Raw;
  std::shared_ptr<std::FILE> file_;
  int64_t frames_written_ = 0;
};

// Whole-sequence convenience wrapper; errors on an empty sequence or mixed specs.
void write_video(std::span<const FrameBuffer> frames, const std::filesystem::path& path,
                 Container container);

std::vector<FrameBuffer> read_video(const std::filesystem::path& path,
                                    const std::optional<RawFormat>& fmt = std::nullopt);

}  // namespace rdbench
