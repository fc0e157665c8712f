#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rdbench/bd.hpp"
#include "rdbench/error.hpp"
#include "rdbench/media_io.hpp"
#include "rdbench/metrics.hpp"
#include "rdbench/mock_codec.hpp"
#include "rdbench/resample.hpp"
#include "rdbench/tool.hpp"

namespace py = pybind11;
using namespace rdbench;

namespace {

using PlaneArray = py::array_t<uint16_t, py::array::c_style | py::array::forcecast>;

std::vector<uint16_t> plane_vector(const PlaneArray& arr) {
  if (arr.ndim() != 2) throw ValidationError("plane arrays must be 2-D (height, width)");
  auto r = arr.unchecked<2>();
  std::vector<uint16_t> out(size_t(arr.shape(0)) * size_t(arr.shape(1)));
  for (py::ssize_t y = 0; y < arr.shape(0); ++y)
    for (py::ssize_t x = 0; x < arr.shape(1); ++x)
      out[size_t(y) * size_t(arr.shape(1)) + size_t(x)] = r(y, x);
  return out;
}

PlaneArray plane_array(const std::vector<uint16_t>& plane, int width, int height) {
  PlaneArray arr({height, width});
  auto w = arr.mutable_unchecked<2>();
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) w(y, x) = plane[size_t(y) * size_t(width) + size_t(x)];
  return arr;
}

FrameBuffer frame_from_luma(const PlaneArray& arr, int bit_depth) {
  VideoSpec spec;
  spec.width = int(arr.shape(1));
  spec.height = int(arr.shape(0));
  spec.bit_depth = bit_depth;
  spec.fps_num = 30;
  spec.fps_den = 1;
  FrameBuffer f(spec);
  f.y = plane_vector(arr);
  return f;
}

RDCurve curve_from_pylist(const std::string& label, const py::list& points) {
  std::vector<RDPoint> pts;
  for (const auto& item : points) {
    py::dict d = item.cast<py::dict>();
    RDPoint p;
    p.bitrate_mbps = d["bitrate_mbps"].cast<double>();
    if (d.contains("qp") && !d["qp"].is_none()) p.qp = d["qp"].cast<int>();
    for (const auto& kv : d["metrics"].cast<py::dict>())
      p.metrics[kv.first.cast<std::string>()] = kv.second.cast<double>();
    pts.push_back(std::move(p));
  }
  return RDCurve::create(label, std::move(pts));
}

py::dict bd_result_dict(const BDResult& r) {
  py::dict d;
  d["kind"] = r.kind == BDResult::Kind::RatePercent ? "bd_rate_percent" : "bd_metric_delta";
  d["value"] = r.value;
  d["overlap"] = py::make_tuple(r.overlap_lo, r.overlap_hi);
  d["interp"] = to_string(r.interp);
  return d;
}

}  // namespace

PYBIND11_MODULE(_rdbench, m) {
  m.doc() = "Rate-distortion benchmarking core: resampling, quality metrics, "
            "Bjontegaard deltas, and the hermetic mock codec";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseFailure", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<ToolError>(m, "ToolFailure", PyExc_RuntimeError);

  m.def("lanczos_weight", &lanczos_weight, py::arg("x"), py::arg("a") = 3);
  m.def("bicubic_weight", &bicubic_weight, py::arg("x"), py::arg("a") = -0.5);

  m.def(
      "resample_plane",
      [](const PlaneArray& plane, int dst_width, int dst_height, const std::string& filter,
         int bit_depth) {
        ResampleJob job{int(plane.shape(1)), int(plane.shape(0)), dst_width, dst_height,
                        FilterKind::parse(filter)};
        auto out = rdbench::resample_plane(plane_vector(plane), job.src_width, job.src_height,
                                           job, (1 << bit_depth) - 1);
        return plane_array(out, dst_width, dst_height);
      },
      py::arg("plane"), py::arg("dst_width"), py::arg("dst_height"),
      py::arg("filter") = "lanczos:3", py::arg("bit_depth") = 8,
      "Separable resample of a 2-D uint16 plane");

  m.def(
      "psnr",
      [](const PlaneArray& ref, const PlaneArray& test, int bit_depth) {
        return psnr_y(frame_from_luma(ref, bit_depth), frame_from_luma(test, bit_depth));
      },
      py::arg("ref"), py::arg("test"), py::arg("bit_depth") = 8,
      "Luma PSNR between two 2-D planes; +inf when identical");

  m.def(
      "ssim",
      [](const PlaneArray& ref, const PlaneArray& test, int bit_depth) {
        return ssim_y(frame_from_luma(ref, bit_depth), frame_from_luma(test, bit_depth));
      },
      py::arg("ref"), py::arg("test"), py::arg("bit_depth") = 8,
      "Single-scale SSIM (11x11 Gaussian window) between two 2-D planes");

  m.def(
      "si_ti",
      [](const std::vector<PlaneArray>& frames, int bit_depth) {
        std::vector<FrameBuffer> fb;
        fb.reserve(frames.size());
        for (const auto& f : frames) fb.push_back(frame_from_luma(f, bit_depth));
        auto r = si_ti_frames(fb);
        py::dict d;
        d["si"] = r.si;
        d["ti"] = r.ti ? py::cast(*r.ti) : py::none();
        d["per_frame_si"] = r.per_frame_si;
        d["per_frame_ti"] = r.per_frame_ti;
        return d;
      },
      py::arg("frames"), py::arg("bit_depth") = 8,
      "P.910-style spatial/temporal information over a list of luma planes");

  m.def(
      "bd_rate",
      [](const std::string& anchor_label, const py::list& anchor_points,
         const std::string& test_label, const py::list& test_points, const std::string& metric,
         const std::string& interp) {
        auto a = curve_from_pylist(anchor_label, anchor_points);
        auto t = curve_from_pylist(test_label, test_points);
        return bd_result_dict(bd_rate(a, t, metric, parse_interp_mode(interp)));
      },
      py::arg("anchor_label"), py::arg("anchor_points"), py::arg("test_label"),
      py::arg("test_points"), py::arg("metric") = "psnr_y", py::arg("interp") = "pchip");

  m.def(
      "bd_metric",
      [](const std::string& anchor_label, const py::list& anchor_points,
         const std::string& test_label, const py::list& test_points, const std::string& metric,
         const std::string& interp) {
        auto a = curve_from_pylist(anchor_label, anchor_points);
        auto t = curve_from_pylist(test_label, test_points);
        return bd_result_dict(bd_metric(a, t, metric, parse_interp_mode(interp)));
      },
      py::arg("anchor_label"), py::arg("anchor_points"), py::arg("test_label"),
      py::arg("test_points"), py::arg("metric") = "psnr_y", py::arg("interp") = "pchip");

  m.def(
      "bd_metric_interval",
      [](const std::string& anchor_label, const py::list& anchor_points,
         const std::string& test_label, const py::list& test_points, const std::string& metric,
         double lo_mbps, double hi_mbps, const std::string& interp) -> py::object {
        auto a = curve_from_pylist(anchor_label, anchor_points);
        auto t = curve_from_pylist(test_label, test_points);
        auto r = bd_metric_interval(a, t, metric, lo_mbps, hi_mbps, parse_interp_mode(interp));
        if (!r) return py::none();  // insufficient data
        return bd_result_dict(*r);
      },
      py::arg("anchor_label"), py::arg("anchor_points"), py::arg("test_label"),
      py::arg("test_points"), py::arg("metric"), py::arg("lo_mbps"), py::arg("hi_mbps"),
      py::arg("interp") = "pchip");

  m.def("derive_bitrate_mbps",
        [](uint64_t bytes, int64_t fps_num, int64_t fps_den, int64_t frames) {
          VideoSpec spec;
          spec.fps_num = fps_num;
          spec.fps_den = fps_den;
          spec.frame_count = frames;
          return derive_bitrate_mbps(bytes, spec);
        },
        py::arg("bytes"), py::arg("fps_num"), py::arg("fps_den"), py::arg("frames"));

  m.def(
      "read_video_luma",
      [](const std::string& path) {
        auto frames = read_video(path);
        std::vector<PlaneArray> out;
        out.reserve(frames.size());
        for (const auto& f : frames)
          out.push_back(plane_array(f.y, f.spec.width, f.spec.height));
        return out;
      },
      py::arg("path"), "Luma planes of a Y4M file as a list of 2-D arrays");

  m.def(
      "write_video_luma",
      [](const std::string& path, const std::vector<PlaneArray>& frames, int bit_depth,
         int64_t fps_num, int64_t fps_den) {
        if (frames.empty()) throw ValidationError("refusing to write an empty frame sequence");
        std::vector<FrameBuffer> fb;
        for (const auto& f : frames) {
          auto frame = frame_from_luma(f, bit_depth);
          frame.spec.fps_num = fps_num;
          frame.spec.fps_den = fps_den;
          // constant mid-gray chroma
          std::fill(frame.cb.begin(), frame.cb.end(), uint16_t(1 << (bit_depth - 1)));
          std::fill(frame.cr.begin(), frame.cr.end(), uint16_t(1 << (bit_depth - 1)));
          fb.push_back(std::move(frame));
        }
        write_video(fb, path, Container::Y4M);
      },
      py::arg("path"), py::arg("frames"), py::arg("bit_depth") = 8, py::arg("fps_num") = 30,
      py::arg("fps_den") = 1, "Write luma planes (gray chroma) to a Y4M file");

  m.def(
      "mock_codec_roundtrip",
      [](const std::string& input_y4m, int qp, const std::string& bitstream_path,
         const std::string& recon_y4m) {
        mock_encode_file(input_y4m, qp, bitstream_path,
                         recon_y4m.empty() ? std::nullopt
                                           : std::optional<std::filesystem::path>(recon_y4m));
        return std::filesystem::file_size(bitstream_path);
      },
      py::arg("input_y4m"), py::arg("qp"), py::arg("bitstream_path"),
      py::arg("recon_y4m") = std::string(),
      "Encode a Y4M file with the hermetic mock codec; returns bitstream bytes");

  m.attr("__version__") = "1.0.0";
}
