#include "rdbench/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rdbench/bd.hpp"
#include "rdbench/error.hpp"
#include "rdbench/media_io.hpp"
#include "rdbench/metrics.hpp"
#include "rdbench/mock_codec.hpp"
#include "rdbench/pipeline.hpp"
#include "rdbench/report.hpp"
#include "rdbench/resample.hpp"

namespace rdbench {

namespace {

namespace fs = std::filesystem;

struct RawFlags {
  int width = 0;
  int height = 0;
  int bit_depth = 8;
  std::string fps = "30";
};

std::pair<int64_t, int64_t> parse_fps(const std::string& text) {
  auto sep = text.find_first_of("/:");
  try {
    if (sep == std::string::npos) return {std::stoll(text), 1};
    return {std::stoll(text.substr(0, sep)), std::stoll(text.substr(sep + 1))};
  } catch (const std::exception&) {
    throw ValidationError("malformed frame rate '" + text + "' (expected N or N/D)");
  }
}

std::optional<RawFormat> raw_format_from(const RawFlags& flags) {
  if (flags.width == 0 && flags.height == 0) return std::nullopt;
  auto [num, den] = parse_fps(flags.fps);
  return RawFormat{flags.width, flags.height, flags.bit_depth, num, den};
}

void add_raw_flags(CLI::App* cmd, RawFlags& flags, const std::string& what) {
  cmd->add_option("--width", flags.width, "Raw " + what + " width (raw input only)");
  cmd->add_option("--height", flags.height, "Raw " + what + " height (raw input only)");
  cmd->add_option("--bit-depth", flags.bit_depth, "Raw bit depth, 8 or 10")
      ->check(CLI::IsMember({8, 10}));
  cmd->add_option("--fps", flags.fps, "Raw frame rate, N or N/D");
}

Container container_for(const fs::path& path) {
  return path.extension() == ".y4m" ? Container::Y4M : Container::Raw;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty())
    std::cout << text;
  else
    write_text_file(out_path, text);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    if (comma == std::string::npos) {
      if (start < text.size()) out.push_back(text.substr(start));
      break;
    }
    if (comma > start) out.push_back(text.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

// ---- subcommand bodies -----------------------------------------------------

int cmd_resample(const std::string& in, const std::string& out, int width, int height,
                 const std::string& filter_text, const RawFlags& raw) {
  FilterKind filter = FilterKind::parse(filter_text);
  auto reader = VideoReader::open(in, raw_format_from(raw));
  VideoSpec out_spec = reader.spec();
  out_spec.width = width;
  out_spec.height = height;
  auto writer = VideoWriter::create(out, out_spec, container_for(out));
  for (int64_t i = 0; i < reader.spec().frame_count; ++i)
    writer.write_frame(resample_frame(reader.read_frame(i), width, height, filter));
  writer.close();
  return 0;
}

int cmd_metrics(const std::string& ref, const std::string& test, const std::string& out,
                const std::string& mode_text, const RawFlags& raw) {
  PsnrAggregation mode = mode_text == "psnr-of-mean-mse" ? PsnrAggregation::PsnrOfMeanMse
                                                         : PsnrAggregation::MeanOfFramePsnr;
  if (mode_text != "psnr-of-mean-mse" && mode_text != "mean-of-frame-psnr")
    throw ValidationError("unknown aggregation mode '" + mode_text + "'");
  auto fmt = raw_format_from(raw);
  auto r = VideoReader::open(ref, fmt);
  auto t = VideoReader::open(test, fmt);
  auto score = score_sequence(r, t, mode, true);
  emit(sequence_score_to_json(score, r.spec()), out);
  return 0;
}

int cmd_siti(const std::string& in, const std::string& out, const RawFlags& raw) {
  auto reader = VideoReader::open(in, raw_format_from(raw));
  auto result = si_ti(reader);
  emit(siti_to_json(result, reader.spec()), out);
  return 0;
}

int cmd_bd(const std::string& anchor_path, const std::string& test_path,
           const std::string& metric, const std::string& kind, const std::string& interval_text,
           const std::string& interp_text) {
  auto anchor = curve_from_json_file(anchor_path);
  auto test = curve_from_json_file(test_path);
  InterpMode mode = parse_interp_mode(interp_text);
  if (!interval_text.empty()) {
    if (kind == "rate")
      throw ValidationError("--interval applies to the BD-metric variant; use --kind metric");
    auto interval = parse_interval(interval_text);
    auto r = bd_metric_interval(anchor, test, metric, interval.lo_mbps, interval.hi_mbps, mode);
    if (!r) {
      nlohmann::ordered_json j;
      j["kind"] = "bd_metric_delta";
      j["status"] = "insufficient-data";
      std::cout << j.dump(2) << "\n";
      return 0;
    }
    std::cout << bd_result_to_json(*r);
    return 0;
  }
  BDResult r = kind == "metric" ? bd_metric(anchor, test, metric, mode)
                                : bd_rate(anchor, test, metric, mode);
  std::cout << bd_result_to_json(r);
  return 0;
}

int cmd_run(const std::string& config_path) {
  auto cfg = load_experiment_config(config_path);
  int failures = 0;
  for (const auto& seq : cfg.sequences)
    for (const auto& approach : cfg.approaches) {
      try {
        auto result = run_approach(cfg, seq, approach);
        std::cout << "curve: " << result.curve_path.string() << "\n";
      } catch (const std::exception& e) {
        ++failures;
        std::cerr << "failed: " << seq.name << "/" << approach.label << ": " << e.what()
                  << "\n";
      }
    }
  return failures == 0 ? 0 : 2;
}

int cmd_sweep(const std::string& config_path, int workers_override, bool clean) {
  auto cfg = load_experiment_config(config_path);
  if (workers_override > 0) cfg.workers = workers_override;
  if (clean) fs::remove_all(cfg.output_dir);
  auto summary = sweep(cfg);
  std::cout << sweep_summary_to_json(summary);
  return summary.failures.empty() ? 0 : 2;
}

int cmd_prepare_sr(const std::string& config_path, const std::string& encoder,
                   std::vector<std::string> hr, const std::string& hr_dir,
                   const std::string& qps_text, const std::string& out_dir) {
  auto cfg = load_experiment_config(config_path);
  const ToolTemplate& enc = cfg.tool(encoder);
  std::vector<fs::path> inputs;
  for (const auto& h : hr) inputs.emplace_back(h);
  if (!hr_dir.empty()) {
    std::vector<fs::path> found;
    for (const auto& e : fs::directory_iterator(hr_dir))
      if (e.is_regular_file() && e.path().extension() == ".y4m") found.push_back(e.path());
    std::sort(found.begin(), found.end());
    inputs.insert(inputs.end(), found.begin(), found.end());
  }
  std::vector<int> qps;
  for (const auto& q : split_list(qps_text)) qps.push_back(std::stoi(q));
  auto manifest = prepare_sr_training_pairs(inputs, enc, qps, out_dir);
  std::cout << "pairs: " << manifest.pairs.size() << "\nfailures: " << manifest.failures
            << "\nmanifest: " << manifest.manifest_path.string() << "\n";
  return manifest.failures == 0 ? 0 : 2;
}

int cmd_report(const std::string& results, const std::string& anchor,
               const std::string& tests_text, const std::string& metrics_text,
               const std::string& intervals_text, const std::string& plot_metric,
               const std::string& format_text, const std::string& out,
               const std::string& interp_text) {
  auto tree = load_results_tree(results);
  auto format = parse_output_format(format_text);
  InterpMode mode = parse_interp_mode(interp_text);
  auto metrics = split_list(metrics_text);
  auto tests = split_list(tests_text);

  if (!plot_metric.empty()) {
    std::vector<RDCurve> curves;
    for (const auto& [seq, labels] : tree.curves)
      for (const auto& [label, curve] : labels) curves.push_back(curve);
    emit(emit_curve_plotdata(curves, plot_metric, format), out);
    return 0;
  }

  if (anchor.empty() || tests.empty())
    throw ValidationError("report needs --anchor and --test labels (or --plot)");

  ReportBundle bundle;
  bundle.matrix = bd_matrix_from_results(tree, anchor, tests.front(), metrics, mode);
  if (!intervals_text.empty()) {
    std::vector<IntervalSpec> intervals;
    if (intervals_text == "default")
      intervals = default_intervals();
    else
      for (const auto& i : split_list(intervals_text)) intervals.push_back(parse_interval(i));
    bundle.interval_table = interval_table_from_results(tree, anchor, tests, metrics, intervals,
                                                        mode);
  }
  emit(render_report(bundle, format), out);
  return 0;
}

int cmd_mock_codec(const std::string& mode, const std::string& in, const std::string& out,
                   int qp, const std::string& recon) {
  if (mode == "encode") {
    std::optional<fs::path> recon_path;
    if (!recon.empty()) recon_path = fs::path(recon);
    mock_encode_file(in, qp, out, recon_path);
  } else if (mode == "decode") {
    mock_decode_file(in, out);
  } else if (mode == "layered-encode") {
    mock_layered_encode_file(in, qp, out);
  } else if (mode == "layered-decode") {
    mock_layered_decode_file(in, out);
  } else {
    throw ValidationError("unknown mock-codec mode '" + mode + "'");
  }
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"rdbench: rate-distortion benchmarking for backward-compatible "
               "multi-resolution video delivery"};
  app.require_subcommand(1);
  bool json_errors = false;
  app.add_flag("--json-errors", json_errors, "Machine-readable errors on stderr");

  // resample
  std::string rs_in, rs_out, rs_filter = "lanczos:3";
  int rs_w = 0, rs_h = 0;
  RawFlags rs_raw;
  auto* rs = app.add_subcommand("resample", "Scale a video with a separable filter");
  rs->add_option("--in", rs_in)->required();
  rs->add_option("--out", rs_out)->required();
  rs->add_option("--width", rs_w, "Target width")->required();
  rs->add_option("--height", rs_h, "Target height")->required();
  rs->add_option("--filter", rs_filter, "lanczos[:a] or bicubic[:a]");
  rs->add_option("--in-width", rs_raw.width, "Raw input width");
  rs->add_option("--in-height", rs_raw.height, "Raw input height");
  rs->add_option("--bit-depth", rs_raw.bit_depth)->check(CLI::IsMember({8, 10}));
  rs->add_option("--fps", rs_raw.fps, "Raw input frame rate, N or N/D");

  // metrics
  std::string m_ref, m_test, m_out, m_mode = "mean-of-frame-psnr";
  RawFlags m_raw;
  auto* me = app.add_subcommand("metrics", "Full-reference PSNR-Y/SSIM report");
  me->add_option("--ref", m_ref)->required();
  me->add_option("--test", m_test)->required();
  me->add_option("--out", m_out, "Report JSON path (stdout when absent)");
  me->add_option("--mode", m_mode, "mean-of-frame-psnr | psnr-of-mean-mse");
  add_raw_flags(me, m_raw, "input");

  // siti
  std::string s_in, s_out;
  RawFlags s_raw;
  auto* si = app.add_subcommand("siti", "Spatial/temporal information descriptors");
  si->add_option("--in", s_in)->required();
  si->add_option("--out", s_out, "Report JSON path (stdout when absent)");
  add_raw_flags(si, s_raw, "input");

  // bd
  std::string bd_anchor, bd_test, bd_metric_name = "psnr_y", bd_kind = "rate";
  std::string bd_interval, bd_interp = "pchip";
  auto* bd = app.add_subcommand("bd", "Bjontegaard delta between two curve files");
  bd->add_option("--anchor", bd_anchor)->required();
  bd->add_option("--test", bd_test)->required();
  bd->add_option("--metric", bd_metric_name, "psnr_y | ssim | vmaf | ...");
  bd->add_option("--kind", bd_kind, "rate | metric")->check(CLI::IsMember({"rate", "metric"}));
  bd->add_option("--interval", bd_interval, "Bitrate interval lo:hi in Mb/s (BD-metric)");
  bd->add_option("--interp", bd_interp, "pchip | poly")
      ->check(CLI::IsMember({"pchip", "poly"}));

  // run
  std::string run_config;
  auto* run = app.add_subcommand("run", "Run every (sequence, approach) experiment");
  run->add_option("--config", run_config)->required();

  // sweep
  std::string sweep_config;
  int sweep_workers = 0;
  bool sweep_clean = false;
  auto* sw = app.add_subcommand("sweep", "Resumable cell-level experiment sweep");
  sw->add_option("--config", sweep_config)->required();
  sw->add_option("--workers", sweep_workers, "Override the config worker count");
  sw->add_flag("--clean", sweep_clean, "Purge the output directory first");

  // prepare-sr-data
  std::string sr_config, sr_encoder, sr_hr_dir, sr_qps = "17,22,27,32,37", sr_out;
  std::vector<std::string> sr_hr;
  auto* sr = app.add_subcommand("prepare-sr-data",
                                "Prepare LR/HR super-resolution training pairs");
  sr->add_option("--config", sr_config)->required();
  sr->add_option("--encoder", sr_encoder, "Tool name from the config")->required();
  sr->add_option("--hr", sr_hr, "HR input files");
  sr->add_option("--hr-dir", sr_hr_dir, "Directory of HR .y4m inputs");
  sr->add_option("--qps", sr_qps, "Comma-separated QP list");
  sr->add_option("--out-dir", sr_out)->required();

  // report
  std::string rp_results, rp_anchor, rp_tests, rp_metrics = "psnr_y,ssim,vmaf";
  std::string rp_intervals, rp_plot, rp_format = "text", rp_out, rp_interp = "pchip";
  auto* rp = app.add_subcommand("report", "Tables and plot data from sweep results");
  rp->add_option("--results", rp_results, "Experiment output directory")->required();
  rp->add_option("--anchor", rp_anchor, "Anchor curve label");
  rp->add_option("--test", rp_tests, "Test curve label(s), comma separated");
  rp->add_option("--metrics", rp_metrics, "Comma-separated metric list");
  rp->add_option("--intervals", rp_intervals, "'default' or lo:hi[,lo:hi...]");
  rp->add_option("--plot", rp_plot, "Emit plot data for this metric instead of tables");
  rp->add_option("--format", rp_format, "text | csv | json");
  rp->add_option("--out", rp_out, "Output path (stdout when absent)");
  rp->add_option("--interp", rp_interp, "pchip | poly");

  // mock-codec (hermetic test codec; used as an external tool in tests)
  std::string mc_mode, mc_in, mc_out, mc_recon;
  int mc_qp = 32;
  auto* mc = app.add_subcommand("mock-codec", "Built-in deterministic test codec");
  mc->add_option("--mode", mc_mode, "encode | decode | layered-encode | layered-decode")
      ->required();
  mc->add_option("--in", mc_in)->required();
  mc->add_option("--out", mc_out)->required();
  mc->add_option("--qp", mc_qp);
  mc->add_option("--recon", mc_recon, "Reconstruction output (encode mode)");
  mc->group("");  // hidden from the main help

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);  // prints usage; 0 for --help, nonzero otherwise
  }

  try {
    if (rs->parsed()) return cmd_resample(rs_in, rs_out, rs_w, rs_h, rs_filter, rs_raw);
    if (me->parsed()) return cmd_metrics(m_ref, m_test, m_out, m_mode, m_raw);
    if (si->parsed()) return cmd_siti(s_in, s_out, s_raw);
    if (bd->parsed())
      return cmd_bd(bd_anchor, bd_test, bd_metric_name, bd_kind, bd_interval, bd_interp);
    if (run->parsed()) return cmd_run(run_config);
    if (sw->parsed()) return cmd_sweep(sweep_config, sweep_workers, sweep_clean);
    if (sr->parsed())
      return cmd_prepare_sr(sr_config, sr_encoder, sr_hr, sr_hr_dir, sr_qps, sr_out);
    if (rp->parsed())
      return cmd_report(rp_results, rp_anchor, rp_tests, rp_metrics, rp_intervals, rp_plot,
                        rp_format, rp_out, rp_interp);
    if (mc->parsed()) return cmd_mock_codec(mc_mode, mc_in, mc_out, mc_qp, mc_recon);
  } catch (const std::exception& e) {
    int code = dynamic_cast<const ToolError*>(&e) ? 2 : 1;
    if (json_errors) {
      nlohmann::json j{{"error", e.what()},
                       {"kind", code == 2 ? "tool" : "validation"},
                       {"exit", code}};
      std::cerr << j.dump() << "\n";
    } else {
      std::cerr << "error: " << e.what() << "\n";
    }
    return code;
  }
  return 1;
}

}  // namespace rdbench
