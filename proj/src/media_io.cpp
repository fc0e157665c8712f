#include "rdbench/media_io.hpp"

#include <cinttypes>
#include <cstring>
#include <string>

#include "rdbench/error.hpp"

namespace rdbench {

namespace fs = std::filesystem;

namespace {

constexpr const char* kY4mMagic = "YUV4MPEG2";

std::shared_ptr<std::FILE> open_file(const fs::path& path, const char* mode) {
  std::FILE* f = std::fopen(path.string().c_str(), mode);
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  return {f, [](std::FILE* p) {
            if (p) std::fclose(p);
          }};
}

int64_t stat_file_size(const fs::path& path) {
  std::error_code ec;
  auto size = fs::file_size(path, ec);
  if (ec) throw IoError("cannot stat '" + path.string() + "': " + ec.message());
  return int64_t(size);
}

void seek_to(std::FILE* f, int64_t offset, const fs::path& path) {
  if (std::fseek(f, long(offset), SEEK_SET) != 0)
    throw IoError("seek failed in '" + path.string() + "'");
}

// Reads one header line (up to '\n'), bounded to keep malformed files cheap.
std::string read_line(std::FILE* f, const fs::path& path) {
  std::string line;
  for (int i = 0; i < 4096; ++i) {
    int c = std::fgetc(f);
    if (c == EOF) throw ParseError("unexpected end of file in '" + path.string() + "' header");
    if (c == '\n') return line;
    line.push_back(char(c));
  }
  throw ParseError("header line longer than 4096 bytes in '" + path.string() + "'");
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    size_t j = i;
    while (j < s.size() && s[j] != ' ') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

int64_t parse_int(const std::string& s, const std::string& what) {
  try {
    size_t pos = 0;
    int64_t v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("malformed " + what + " '" + s + "'");
  }
}

// C420 family tags: the siting suffixes (jpeg/mpeg2/paldv) share our 4:2:0
// layout; p10 selects 10-bit samples. Anything else is out of scope.
std::pair<Chroma, int> parse_chroma_tag(const std::string& tag) {
  if (tag == "C420" || tag == "C420jpeg" || tag == "C420mpeg2" || tag == "C420paldv")
    return {Chroma::C420, 8};
  if (tag == "C420p10") return {Chroma::C420, 10};
  throw ParseError("unsupported chroma tag '" + tag + "' (only 4:2:0 8/10-bit handled)");
}

VideoSpec parse_y4m_header(const std::string& line, const fs::path& path) {
  auto fields = split_ws(line);
  if (fields.empty() || fields[0] != kY4mMagic)
    throw ParseError("'" + path.string() + "' is not a Y4M stream");
  VideoSpec spec;
  spec.bit_depth = 8;  // C420 default when no C tag present
  bool have_w = false, have_h = false, have_f = false;
  for (size_t i = 1; i < fields.size(); ++i) {
    const std::string& f = fields[i];
    switch (f[0]) {
      case 'W':
        spec.width = int(parse_int(f.substr(1), "Y4M width"));
        have_w = true;
        break;
      case 'H':
        spec.height = int(parse_int(f.substr(1), "Y4M height"));
        have_h = true;
        break;
      case 'F': {
        auto colon = f.find(':');
        if (colon == std::string::npos) throw ParseError("malformed Y4M frame rate '" + f + "'");
        spec.fps_num = parse_int(f.substr(1, colon - 1), "Y4M fps numerator");
        spec.fps_den = parse_int(f.substr(colon + 1), "Y4M fps denominator");
        have_f = true;
        break;
      }
      case 'C': {
        auto [chroma, depth] = parse_chroma_tag(f);
        spec.chroma = chroma;
        spec.bit_depth = depth;
        break;
      }
      case 'I':
      case 'A':
      case 'X':
        break;  // interlacing, aspect, extensions: accepted and ignored
      default:
        throw ParseError("unknown Y4M header field '" + f + "'");
    }
  }
  if (!have_w || !have_h || !have_f)
    throw ParseError("Y4M header missing W/H/F in '" + path.string() + "'");
  spec.validate();
  return spec;
}

void read_plane(std::FILE* f, uint16_t* dst, int64_t count, int bit_depth, int maxv,
                const fs::path& path) {
  if (bit_depth == 8) {
    std::vector<uint8_t> tmp(static_cast<size_t>(count));
    if (std::fread(tmp.data(), 1, size_t(count), f) != size_t(count))
      throw IoError("truncated frame data in '" + path.string() + "'");
    for (int64_t i = 0; i < count; ++i) dst[i] = tmp[i];
  } else {
    std::vector<uint8_t> tmp(size_t(count) * 2);
    if (std::fread(tmp.data(), 1, tmp.size(), f) != tmp.size())
      throw IoError("truncated frame data in '" + path.string() + "'");
    for (int64_t i = 0; i < count; ++i) {
      uint16_t v = uint16_t(tmp[2 * i] | (tmp[2 * i + 1] << 8));  // little-endian
      if (v > maxv)
        throw ParseError("sample " + std::to_string(v) + " exceeds " + std::to_string(maxv) +
                         " in '" + path.string() + "'");
      dst[i] = v;
    }
  }
}

void write_plane(std::FILE* f, const uint16_t* src, int64_t count, int bit_depth,
                 const fs::path& path) {
  if (bit_depth == 8) {
    std::vector<uint8_t> tmp(static_cast<size_t>(count));
    for (int64_t i = 0; i < count; ++i) tmp[i] = uint8_t(src[i]);
    if (std::fwrite(tmp.data(), 1, tmp.size(), f) != tmp.size())
      throw IoError("write failed for '" + path.string() + "'");
  } else {
    std::vector<uint8_t> tmp(size_t(count) * 2);
    for (int64_t i = 0; i < count; ++i) {
      tmp[2 * i] = uint8_t(src[i] & 0xFF);
      tmp[2 * i + 1] = uint8_t(src[i] >> 8);
    }
    if (std::fwrite(tmp.data(), 1, tmp.size(), f) != tmp.size())
      throw IoError("write failed for '" + path.string() + "'");
  }
}

std::string y4m_header_line(const VideoSpec& spec) {
  std::string chroma = spec.bit_depth == 10 ? "C420p10" : "C420";
  char buf[128];
  std::snprintf(buf, sizeof(buf), "YUV4MPEG2 W%d H%d F%" PRId64 ":%" PRId64 " Ip A1:1 %s\n",
                spec.width, spec.height, spec.fps_num, spec.fps_den, chroma.c_str());
  return buf;
}

}  // namespace

VideoReader VideoReader::open_y4m(const fs::path& path) {
  VideoReader r;
  r.path_ = path;
  r.container_ = Container::Y4M;
  r.file_ = open_file(path, "rb");
  std::string header = read_line(r.file_.get(), path);
  r.spec_ = parse_y4m_header(header, path);
  r.build_y4m_index();
  r.spec_.frame_count = int64_t(r.frame_offsets_.size());
  return r;
}

void VideoReader::build_y4m_index() {
  // Hop from frame header to frame header; only headers are read.
  const int64_t payload = spec_.frame_bytes();
  const int64_t total = stat_file_size(path_);
  std::FILE* f = file_.get();
  int64_t pos = std::ftell(f);
  while (pos < total) {
    seek_to(f, pos, path_);
    std::string line = read_line(f, path_);
    if (line.substr(0, 5) != "FRAME")
      throw ParseError("expected FRAME marker at offset " + std::to_string(pos) + " in '" +
                       path_.string() + "'");
    int64_t data_at = pos + int64_t(line.size()) + 1;
    if (data_at + payload > total) throw ParseError("truncated frame in '" + path_.string() + "'");
    frame_offsets_.push_back(data_at);
    pos = data_at + payload;
  }
}

VideoReader VideoReader::open_raw(const fs::path& path, const RawFormat& fmt) {
  VideoReader r;
  r.path_ = path;
  r.container_ = Container::Raw;
  r.spec_.width = fmt.width;
  r.spec_.height = fmt.height;
  r.spec_.bit_depth = fmt.bit_depth;
  r.spec_.fps_num = fmt.fps_num;
  r.spec_.fps_den = fmt.fps_den;
  r.spec_.frame_count = 0;
  r.spec_.validate();
  const int64_t total = stat_file_size(path);
  const int64_t per_frame = r.spec_.frame_bytes();
  if (total % per_frame != 0)
    throw ValidationError("raw file size " + std::to_string(total) +
                          " is not a multiple of the frame size " + std::to_string(per_frame));
  r.spec_.frame_count = total / per_frame;
  r.file_ = open_file(path, "rb");
  return r;
}

VideoReader VideoReader::open(const fs::path& path, const std::optional<RawFormat>& fmt) {
  {
    auto f = open_file(path, "rb");
    char magic[9] = {};
    size_t n = std::fread(magic, 1, 9, f.get());
    if (n == 9 && std::memcmp(magic, kY4mMagic, 9) == 0) return open_y4m(path);
  }
  if (!fmt)
    throw ValidationError("'" + path.string() +
                          "' has no Y4M header; raw input needs explicit "
                          "width/height/bit-depth/fps");
  return open_raw(path, *fmt);
}

FrameBuffer VideoReader::read_frame(int64_t index) {
  if (index < 0 || index >= spec_.frame_count)
    throw ValidationError("frame index " + std::to_string(index) + " out of range [0, " +
                          std::to_string(spec_.frame_count) + ")");
  int64_t offset = container_ == Container::Y4M
                       ? frame_offsets_[size_t(index)]
                       : index * spec_.frame_bytes();
  std::FILE* f = file_.get();
  seek_to(f, offset, path_);
  FrameBuffer frame(spec_);
  const int maxv = spec_.max_value();
  read_plane(f, frame.y.data(), spec_.luma_samples(), spec_.bit_depth, maxv, path_);
  read_plane(f, frame.cb.data(), spec_.chroma_samples(), spec_.bit_depth, maxv, path_);
  read_plane(f, frame.cr.data(), spec_.chroma_samples(), spec_.bit_depth, maxv, path_);
  return frame;
}

VideoReader VideoReader::clone() const {
  VideoReader r;
  r.path_ = path_;
  r.spec_ = spec_;
  r.container_ = container_;
  r.frame_offsets_ = frame_offsets_;
  r.file_ = open_file(path_, "rb");
  return r;
}

VideoSpec probe_stream(const fs::path& path, const std::optional<RawFormat>& fmt) {
  return VideoReader::open(path, fmt).spec();
}

VideoWriter VideoWriter::create(const fs::path& path, const VideoSpec& spec,
                                Container container) {
  VideoSpec s = spec;
  s.frame_count = 0;
  s.validate();
  VideoWriter w;
  w.path_ = path;
  w.spec_ = s;
  w.container_ = container;
  w.file_ = open_file(path, "wb");
  if (container == Container::Y4M) {
    std::string header = y4m_header_line(s);
    if (std::fwrite(header.data(), 1, header.size(), w.file_.get()) != header.size())
      throw IoError("write failed for '" + path.string() + "'");
  }
  return w;
}

void VideoWriter::write_frame(const FrameBuffer& frame) {
  if (!file_) throw IoError("writer for '" + path_.string() + "' is closed");
  if (!frame.spec.same_geometry(spec_) || frame.spec.fps_num != spec_.fps_num ||
      frame.spec.fps_den != spec_.fps_den)
    throw ValidationError("frame spec does not match the writer spec for '" + path_.string() +
                          "'");
  frame.validate();
  std::FILE* f = file_.get();
  if (container_ == Container::Y4M) {
    if (std::fwrite("FRAME\n", 1, 6, f) != 6)
      throw IoError("write failed for '" + path_.string() + "'");
  }
  write_plane(f, frame.y.data(), spec_.luma_samples(), spec_.bit_depth, path_);
  write_plane(f, frame.cb.data(), spec_.chroma_samples(), spec_.bit_depth, path_);
  write_plane(f, frame.cr.data(), spec_.chroma_samples(), spec_.bit_depth, path_);
  ++frames_written_;
}

void VideoWriter::close() {
  if (file_) {
    if (std::fflush(file_.get()) != 0) throw IoError("flush failed for '" + path_.string() + "'");
    file_.reset();
  }
}

void write_video(std::span<const FrameBuffer> frames, const fs::path& path, Container container) {
  if (frames.empty()) throw ValidationError("refusing to write an empty frame sequence");
  for (const auto& f : frames)
    if (!(f.spec.same_geometry(frames[0].spec) && f.spec.fps_num == frames[0].spec.fps_num &&
          f.spec.fps_den == frames[0].spec.fps_den))
      throw ValidationError("mixed specs in frame sequence");
  auto w = VideoWriter::create(path, frames[0].spec, container);
  for (const auto& f : frames) w.write_frame(f);
  w.close();
}

std::vector<FrameBuffer> read_video(const fs::path& path, const std::optional<RawFormat>& fmt) {
  auto r = VideoReader::open(path, fmt);
  std::vector<FrameBuffer> frames;
  frames.reserve(size_t(r.spec().frame_count));
  for (int64_t i = 0; i < r.spec().frame_count; ++i) frames.push_back(r.read_frame(i));
  return frames;
}

}  // namespace rdbench
