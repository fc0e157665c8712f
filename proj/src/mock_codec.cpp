#include "rdbench/mock_codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "rdbench/error.hpp"
#include "rdbench/media_io.hpp"
#include "rdbench/resample.hpp"

namespace rdbench {

namespace {

// Integer cosine transform basis with exactly orthogonal rows
// (row i . row j = 0 for i != j). Odd rows use the classic (10,9,6,2)
// solution of a*b = a*c + b*d + c*d; even AC rows are orthogonal for any
// integer pair, (12,5) tracks the DCT-II cosine ratios.
constexpr int64_t kT[8][8] = {
    {1, 1, 1, 1, 1, 1, 1, 1},
    {10, 9, 6, 2, -2, -6, -9, -10},
    {12, 5, -5, -12, -12, -5, 5, 12},
    {9, -2, -10, -6, 6, 10, 2, -9},
    {1, -1, -1, 1, 1, -1, -1, 1},
    {6, -10, 2, 9, -9, -2, 10, -6},
    {5, -12, 12, -5, -5, 12, -12, 5},
    {2, -6, 9, -10, 10, -9, 6, -2},
};
// Row squared norms (T * T^t diagonal).
constexpr double kRowNorm[8] = {8, 442, 676, 442, 8, 442, 676, 442};

constexpr char kMagic[4] = {'R', 'D', 'M', 'C'};
constexpr size_t kHeaderBytes = 32;
constexpr size_t kPayloadSizeOffset = 24;

class BitWriter {
 public:
  void put_bit(int b) {
    cur_ = uint8_t((cur_ << 1) | (b & 1));
    if (++nbits_ == 8) {
      bytes_.push_back(cur_);
      cur_ = 0;
      nbits_ = 0;
    }
  }
  void put_ue(uint64_t v) {
    uint64_t code = v + 1;
    int bits = 0;
    for (uint64_t t = code; t > 1; t >>= 1) ++bits;
    for (int i = 0; i < bits; ++i) put_bit(0);
    for (int i = bits; i >= 0; --i) put_bit(int((code >> i) & 1));
  }
  void put_se(int64_t v) { put_ue(v > 0 ? uint64_t(2 * v - 1) : uint64_t(-2 * v)); }
  void align() {
    while (nbits_ != 0) put_bit(0);
  }
  const std::vector<uint8_t>& bytes() const { return bytes_; }

 private:
  std::vector<uint8_t> bytes_;
  uint8_t cur_ = 0;
  int nbits_ = 0;
};

class BitReader {
 public:
  BitReader(const uint8_t* data, size_t size) : data_(data), size_(size) {}
  int get_bit() {
    if (pos_ >= size_) throw ParseError("mock bitstream truncated");
    int b = (data_[pos_] >> (7 - nbits_)) & 1;
    if (++nbits_ == 8) {
      nbits_ = 0;
      ++pos_;
    }
    return b;
  }
  uint64_t get_ue() {
    int zeros = 0;
    while (get_bit() == 0) {
      if (++zeros > 63) throw ParseError("mock bitstream corrupt (exp-Golomb overflow)");
    }
    uint64_t code = 1;
    for (int i = 0; i < zeros; ++i) code = (code << 1) | uint64_t(get_bit());
    return code - 1;
  }
  int64_t get_se() {
    uint64_t u = get_ue();
    return (u & 1) ? int64_t((u + 1) / 2) : -int64_t(u / 2);
  }
  void align() {
    if (nbits_ != 0) {
      nbits_ = 0;
      ++pos_;
    }
  }
  size_t byte_pos() const { return nbits_ == 0 ? pos_ : pos_ + 1; }

 private:
  const uint8_t* data_;
  size_t size_;
  size_t pos_ = 0;
  int nbits_ = 0;
};

int padded(int v) { return (v + 7) & ~7; }

// Edge-replicated copy of one plane into an 8-aligned int64 grid.
std::vector<int64_t> pad_plane(const std::vector<uint16_t>& plane, int w, int h) {
  const int pw = padded(w), ph = padded(h);
  std::vector<int64_t> out(size_t(pw) * size_t(ph));
  for (int y = 0; y < ph; ++y) {
    int sy = std::min(y, h - 1);
    for (int x = 0; x < pw; ++x) out[size_t(y) * pw + x] = plane[size_t(sy) * w + std::min(x, w - 1)];
  }
  return out;
}

void forward_ict(const int64_t in[8][8], int64_t out[8][8]) {
  int64_t mid[8][8];
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      int64_t acc = 0;
      for (int k = 0; k < 8; ++k) acc += kT[i][k] * in[k][j];
      mid[i][j] = acc;
    }
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      int64_t acc = 0;
      for (int k = 0; k < 8; ++k) acc += mid[i][k] * kT[j][k];
      out[i][j] = acc;
    }
}

// x = T^t (C / (d_i d_j)) T; exact integers fall out whenever C is the
// untouched forward output, so the final rounding is then a no-op.
void inverse_ict(const int64_t in[8][8], double out[8][8]) {
  double m[8][8];
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) m[i][j] = double(in[i][j]) / (kRowNorm[i] * kRowNorm[j]);
  double mid[8][8];
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 8; ++k) acc += double(kT[k][i]) * m[k][j];
      mid[i][j] = acc;
    }
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 8; ++k) acc += mid[i][k] * double(kT[k][j]);
      out[i][j] = acc;
    }
}

void encode_plane(const std::vector<uint16_t>& plane, int w, int h, double step, BitWriter& bw) {
  const int pw = padded(w), ph = padded(h);
  auto grid = pad_plane(plane, w, h);
  int64_t dc_pred = 0;
  for (int by = 0; by < ph; by += 8)
    for (int bx = 0; bx < pw; bx += 8) {
      int64_t blk[8][8], coef[8][8];
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) blk[y][x] = grid[size_t(by + y) * pw + (bx + x)];
      forward_ict(blk, coef);
      bw.put_se(coef[0][0] - dc_pred);  // DC is carried losslessly
      dc_pred = coef[0][0];
      for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
          if (i == 0 && j == 0) continue;
          bw.put_se(std::llround(double(coef[i][j]) / step));
        }
    }
}

void decode_plane(std::vector<uint16_t>& plane, int w, int h, int maxv, double step,
                  BitReader& br) {
  const int pw = padded(w), ph = padded(h);
  std::vector<int64_t> grid(size_t(pw) * size_t(ph));
  int64_t dc_pred = 0;
  for (int by = 0; by < ph; by += 8)
    for (int bx = 0; bx < pw; bx += 8) {
      int64_t coef[8][8];
      int64_t dc = br.get_se() + dc_pred;
      dc_pred = dc;
      coef[0][0] = dc;
      for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
          if (i == 0 && j == 0) continue;
          coef[i][j] = std::llround(double(br.get_se()) * step);
        }
      double rec[8][8];
      inverse_ict(coef, rec);
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
          grid[size_t(by + y) * pw + (bx + x)] =
              std::clamp<int64_t>(std::llround(rec[y][x]), 0, maxv);
    }
  plane.resize(size_t(w) * size_t(h));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) plane[size_t(y) * w + x] = uint16_t(grid[size_t(y) * pw + x]);
}

void put_u16(std::vector<uint8_t>& v, uint16_t x) {
  v.push_back(uint8_t(x & 0xFF));
  v.push_back(uint8_t(x >> 8));
}
void put_u32(std::vector<uint8_t>& v, uint32_t x) {
  for (int i = 0; i < 4; ++i) v.push_back(uint8_t((x >> (8 * i)) & 0xFF));
}
void put_u64(std::vector<uint8_t>& v, uint64_t x) {
  for (int i = 0; i < 8; ++i) v.push_back(uint8_t((x >> (8 * i)) & 0xFF));
}
uint16_t get_u16(const uint8_t* p) { return uint16_t(p[0] | (p[1] << 8)); }
uint32_t get_u32(const uint8_t* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 | uint32_t(p[3]) << 24;
}
uint64_t get_u64(const uint8_t* p) {
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::vector<uint8_t> make_header(const VideoSpec& spec, int qp) {
  std::vector<uint8_t> h;
  h.insert(h.end(), kMagic, kMagic + 4);
  h.push_back(1);  // version
  h.push_back(0);  // flags
  put_u16(h, uint16_t(spec.width));
  put_u16(h, uint16_t(spec.height));
  h.push_back(uint8_t(spec.bit_depth));
  h.push_back(uint8_t(qp));
  put_u32(h, uint32_t(spec.fps_num));
  put_u32(h, uint32_t(spec.fps_den));
  put_u32(h, uint32_t(spec.frame_count));
  put_u64(h, 0);  // payload size, patched after encoding
  return h;
}

struct StreamHeader {
  VideoSpec spec;
  int qp = 0;
  uint64_t payload_bytes = 0;
};

StreamHeader parse_header(std::span<const uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw ParseError("not a mock-codec bitstream");
  if (bytes[4] != 1) throw ParseError("unsupported mock-codec version");
  StreamHeader h;
  h.spec.width = get_u16(&bytes[6]);
  h.spec.height = get_u16(&bytes[8]);
  h.spec.bit_depth = bytes[10];
  h.qp = bytes[11];
  h.spec.fps_num = get_u32(&bytes[12]);
  h.spec.fps_den = get_u32(&bytes[16]);
  h.spec.frame_count = get_u32(&bytes[20]);
  h.payload_bytes = get_u64(&bytes[kPayloadSizeOffset]);
  h.spec.validate();
  return h;
}

void check_qp(int qp) {
  if (qp < kMockQpMin || qp > kMockQpMax)
    throw ValidationError("mock codec qp " + std::to_string(qp) + " outside [" +
                          std::to_string(kMockQpMin) + ", " + std::to_string(kMockQpMax) + "]");
}

}  // namespace

double mock_quant_step(int qp) {
  check_qp(qp);
  return std::pow(2.0, double(qp - 4) / 6.0);
}

std::vector<uint8_t> mock_encode(std::span<const FrameBuffer> frames, int qp) {
  check_qp(qp);
  if (frames.empty()) throw ValidationError("mock codec needs at least one frame");
  VideoSpec spec = frames[0].spec;
  spec.frame_count = int64_t(frames.size());
  const double step = mock_quant_step(qp);

  std::vector<uint8_t> out = make_header(spec, qp);
  for (const auto& f : frames) {
    if (!f.spec.same_geometry(spec)) throw ValidationError("mixed specs in mock encode");
    BitWriter bw;
    encode_plane(f.y, spec.width, spec.height, step, bw);
    encode_plane(f.cb, spec.chroma_width(), spec.chroma_height(), step, bw);
    encode_plane(f.cr, spec.chroma_width(), spec.chroma_height(), step, bw);
    bw.align();
    out.insert(out.end(), bw.bytes().begin(), bw.bytes().end());
  }
  uint64_t payload = out.size() - kHeaderBytes;
  for (int i = 0; i < 8; ++i) out[kPayloadSizeOffset + size_t(i)] = uint8_t((payload >> (8 * i)) & 0xFF);
  return out;
}

std::vector<FrameBuffer> mock_decode(std::span<const uint8_t> bitstream) {
  StreamHeader h = parse_header(bitstream);
  if (kHeaderBytes + h.payload_bytes > bitstream.size())
    throw ParseError("mock bitstream shorter than its declared payload");
  const double step = mock_quant_step(h.qp);
  BitReader br(bitstream.data() + kHeaderBytes, size_t(h.payload_bytes));
  std::vector<FrameBuffer> frames;
  const int maxv = h.spec.max_value();
  for (int64_t i = 0; i < h.spec.frame_count; ++i) {
    FrameBuffer f(h.spec);
    decode_plane(f.y, h.spec.width, h.spec.height, maxv, step, br);
    decode_plane(f.cb, h.spec.chroma_width(), h.spec.chroma_height(), maxv, step, br);
    decode_plane(f.cr, h.spec.chroma_width(), h.spec.chroma_height(), maxv, step, br);
    br.align();
    frames.push_back(std::move(f));
  }
  return frames;
}

namespace {

std::vector<uint8_t> read_all(const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "rb");
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  std::fseek(f, 0, SEEK_END);
  long size = std::ftell(f);
  std::fseek(f, 0, SEEK_SET);
  std::vector<uint8_t> bytes(static_cast<size_t>(size));
  size_t n = std::fread(bytes.data(), 1, bytes.size(), f);
  std::fclose(f);
  if (n != bytes.size()) throw IoError("short read from '" + path.string() + "'");
  return bytes;
}

void write_all(const std::filesystem::path& path, std::span<const uint8_t> bytes) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  size_t n = std::fwrite(bytes.data(), 1, bytes.size(), f);
  std::fclose(f);
  if (n != bytes.size()) throw IoError("short write to '" + path.string() + "'");
}

}  // namespace

void mock_encode_file(const std::filesystem::path& input_y4m, int qp,
                      const std::filesystem::path& bitstream_path,
                      const std::optional<std::filesystem::path>& recon_y4m) {
  auto frames = read_video(input_y4m);
  auto bits = mock_encode(frames, qp);
  write_all(bitstream_path, bits);
  if (recon_y4m) {
    auto decoded = mock_decode(bits);
    write_video(decoded, *recon_y4m, Container::Y4M);
  }
}

void mock_decode_file(const std::filesystem::path& bitstream_path,
                      const std::filesystem::path& output_y4m) {
  auto bits = read_all(bitstream_path);
  auto frames = mock_decode(bits);
  write_video(frames, output_y4m, Container::Y4M);
}

void mock_layered_encode_file(const std::filesystem::path& input_y4m, int qp,
                              const std::filesystem::path& bitstream_path) {
  auto frames = read_video(input_y4m);
  if (frames.empty()) throw ValidationError("layered mock codec needs at least one frame");
  const auto& spec = frames[0].spec;
  if (spec.width % 4 != 0 || spec.height % 4 != 0)
    throw ValidationError("layered mock codec needs dimensions divisible by 4");
  std::vector<FrameBuffer> base;
  base.reserve(frames.size());
  for (const auto& f : frames)
    base.push_back(resample_frame(f, spec.width / 2, spec.height / 2, FilterKind::bicubic()));
  auto bl = mock_encode(base, qp);
  auto el = mock_encode(frames, qp);
  bl.insert(bl.end(), el.begin(), el.end());  // plain concatenation, both self-delimiting
  write_all(bitstream_path, bl);
}

void mock_layered_decode_file(const std::filesystem::path& bitstream_path,
                              const std::filesystem::path& output_y4m) {
  auto bytes = read_all(bitstream_path);
  StreamHeader bl = parse_header(bytes);
  size_t el_offset = kHeaderBytes + size_t(bl.payload_bytes);
  if (el_offset >= bytes.size())
    throw ParseError("layered mock bitstream lacks an enhancement layer");
  auto frames = mock_decode(std::span<const uint8_t>(bytes).subspan(el_offset));
  write_video(frames, output_y4m, Container::Y4M);
}

}  // namespace rdbench
