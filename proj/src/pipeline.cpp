#include "rdbench/pipeline.hpp"

#include <atomic>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "rdbench/error.hpp"
#include "rdbench/hash.hpp"

namespace rdbench {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string qp_dir_name(int qp) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "qp%02d", qp);
  return buf;
}

std::string fps_binding(const VideoSpec& spec) {
  if (spec.fps_den == 1) return std::to_string(spec.fps_num);
  return std::to_string(spec.fps_num) + "/" + std::to_string(spec.fps_den);
}

bool template_has_placeholder(const ToolTemplate& tool, const std::string& name) {
  return tool.arg_template.find("{" + name + "}") != std::string::npos;
}

// True when the string parses as an internal filter spec rather than a tool name.
bool is_internal_filter(const std::string& text) {
  return text.rfind("lanczos", 0) == 0 || text.rfind("bicubic", 0) == 0;
}

RawFormat raw_format_from_json(const ordered_json& j) {
  RawFormat fmt;
  fmt.width = j.at("width").get<int>();
  fmt.height = j.at("height").get<int>();
  fmt.bit_depth = j.value("bit_depth", 8);
  if (j.contains("fps")) {
    if (j.at("fps").is_number()) {
      fmt.fps_num = j.at("fps").get<int64_t>();
      fmt.fps_den = 1;
    } else {
      std::string s = j.at("fps").get<std::string>();
      auto slash = s.find('/');
      if (slash == std::string::npos) {
        fmt.fps_num = std::stoll(s);
        fmt.fps_den = 1;
      } else {
        fmt.fps_num = std::stoll(s.substr(0, slash));
        fmt.fps_den = std::stoll(s.substr(slash + 1));
      }
    }
  }
  return fmt;
}

// Bounded worker pool over n independent tasks; per-task exceptions are
// captured and returned, never propagated across threads.
std::vector<std::string> run_pool(int workers, int n,
                                  const std::function<void(int)>& task) {
  std::vector<std::string> errors(static_cast<size_t>(n));
  std::atomic<int> next{0};
  int threads = std::clamp(workers, 1, std::max(1, n));
  auto worker = [&] {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        task(i);
      } catch (const std::exception& e) {
        errors[size_t(i)] = e.what();
      } catch (...) {
        errors[size_t(i)] = "unknown error";
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(size_t(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return errors;
}

}  // namespace

Approach parse_approach(const std::string& text) {
  if (text == "simulcast") return Approach::Simulcast;
  if (text == "scalable") return Approach::Scalable;
  if (text == "prepost") return Approach::PrePost;
  throw ValidationError("unknown approach '" + text +
                        "' (expected simulcast, scalable, or prepost)");
}

std::string to_string(Approach a) {
  switch (a) {
    case Approach::Simulcast:
      return "simulcast";
    case Approach::Scalable:
      return "scalable";
    case Approach::PrePost:
      return "prepost";
  }
  return "?";
}

std::vector<int> default_qp_list(Approach a) {
  switch (a) {
    case Approach::Simulcast:
      return {22, 27, 32, 37, 42};
    case Approach::PrePost:
      return {17, 22, 27, 32, 37};
    case Approach::Scalable:
      return {22, 27, 32, 37};
  }
  return {};
}

void ExperimentConfig::validate() const {
  if (sequences.empty()) throw ValidationError("experiment config has no sequences");
  if (approaches.empty()) throw ValidationError("experiment config has no approaches");
  if (output_dir.empty()) throw ValidationError("experiment config needs an output_dir");
  if (workers < 1) throw ValidationError("workers must be at least 1");
  for (const auto& [name, t] : tools) t.validate();
  for (const auto& a : approaches) {
    if (a.qp_list.empty()) throw ValidationError("approach '" + a.label + "' has no QP list");
    if (a.qp_list.size() > 10)
      throw ValidationError("approach '" + a.label + "' has more than 10 QPs");
    for (int qp : a.qp_list)
      if (qp < 0 || qp > 51)
        throw ValidationError("approach '" + a.label + "' has QP " + std::to_string(qp) +
                              " outside [0, 51]");
    if (a.encoder.empty())
      throw ValidationError("approach '" + a.label + "' names no encoder tool");
    tool(a.encoder);
    if (!a.decoder.empty()) tool(a.decoder);
    if (a.kind == Approach::PrePost && !is_internal_filter(a.upscaler)) tool(a.upscaler);
    if (a.kind == Approach::PrePost && is_internal_filter(a.upscaler))
      FilterKind::parse(a.upscaler);  // syntax check
    // Without a {recon} placeholder a decode step is mandatory.
    if (!template_has_placeholder(tool(a.encoder), "recon") && a.decoder.empty())
      throw ValidationError("approach '" + a.label + "': encoder '" + a.encoder +
                            "' does not emit {recon} and no decoder tool is configured");
  }
  if (!vmaf_tool.empty()) tool(vmaf_tool);
}

const ToolTemplate& ExperimentConfig::tool(const std::string& name) const {
  auto it = tools.find(name);
  if (it == tools.end()) throw ValidationError("tool '" + name + "' is not configured");
  return it->second;
}

uint64_t ExperimentConfig::config_hash(const SequenceSource& seq, const ApproachConfig& approach,
                                       int qp) const {
  std::string blob = "v1|" + seq.name + "|" + seq.path.string() + "|";
  std::error_code ec;
  blob += std::to_string(fs::file_size(seq.path, ec)) + "|";
  if (seq.path_4k) blob += seq.path_4k->string();
  blob += "|" + to_string(approach.kind) + "|" + approach.label + "|" +
          std::to_string(qp) + "|" + approach.upscaler + "|";
  auto add_tool = [&](const std::string& name) {
    if (name.empty() || (approach.kind == Approach::PrePost && is_internal_filter(name))) return;
    const auto& t = tool(name);
    blob += name + "{" + t.executable + ";" + t.arg_template + ";";
    for (const auto& o : t.expected_outputs) blob += o + ",";
    blob += "}";
  };
  add_tool(approach.encoder);
  add_tool(approach.decoder);
  if (approach.kind == Approach::PrePost && !is_internal_filter(approach.upscaler))
    add_tool(approach.upscaler);
  if (!vmaf_tool.empty()) add_tool(vmaf_tool);
  for (const auto& m : metric_names) blob += m + ",";
  return fnv1a(blob);
}

ExperimentConfig experiment_config_from_json(const std::string& text, const fs::path& base_dir) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("malformed experiment config: ") + e.what());
  }
  ExperimentConfig cfg;
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  try {
    cfg.output_dir = resolve(j.at("output_dir").get<std::string>());
    cfg.workers = j.value("workers", 1);
    if (j.contains("metrics"))
      cfg.metric_names = j.at("metrics").get<std::vector<std::string>>();
    cfg.vmaf_tool = j.value("vmaf_tool", std::string());

    for (const auto& sj : j.at("sequences")) {
      SequenceSource s;
      s.name = sj.at("name").get<std::string>();
      s.path = resolve(sj.at("path").get<std::string>());
      if (sj.contains("path_4k")) s.path_4k = resolve(sj.at("path_4k").get<std::string>());
      if (sj.contains("raw")) s.raw = raw_format_from_json(sj.at("raw"));
      cfg.sequences.push_back(std::move(s));
    }
    if (j.contains("tools"))
      for (const auto& [name, tj] : j.at("tools").items()) {
        ToolTemplate t;
        t.name = name;
        t.executable = tj.at("executable").get<std::string>();
        t.arg_template = tj.value("args", std::string());
        if (tj.contains("workdir")) t.workdir = resolve(tj.at("workdir").get<std::string>());
        t.timeout_s = tj.value("timeout_s", 86400.0);
        if (tj.contains("expected_outputs"))
          t.expected_outputs = tj.at("expected_outputs").get<std::vector<std::string>>();
        cfg.tools.emplace(name, std::move(t));
      }
    for (const auto& aj : j.at("approaches")) {
      ApproachConfig a;
      a.kind = parse_approach(aj.at("kind").get<std::string>());
      a.label = aj.value("label", to_string(a.kind));
      a.encoder = aj.value("encoder", std::string());
      a.decoder = aj.value("decoder", std::string());
      a.upscaler = aj.value("upscaler", std::string("lanczos:3"));
      if (aj.contains("qp_list")) a.qp_list = aj.at("qp_list").get<std::vector<int>>();
      if (a.qp_list.empty()) a.qp_list = default_qp_list(a.kind);
      cfg.approaches.push_back(std::move(a));
    }
  } catch (const ordered_json::exception& e) {
    throw ParseError(std::string("experiment config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open experiment config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return experiment_config_from_json(ss.str(), fs::absolute(path).parent_path());
}

namespace {

// ---------------------------------------------------------------------------
// Cell execution

struct CellPlan {
  const ExperimentConfig* cfg = nullptr;
  const SequenceSource* seq = nullptr;
  const ApproachConfig* approach = nullptr;
  int qp = 0;
  fs::path cell_dir;
  fs::path src_full;
  VideoSpec spec_full;
  fs::path src_half;  // empty for scalable
  VideoSpec spec_half;
};

VideoSpec probe_source(const SequenceSource& seq) { return probe_stream(seq.path, seq.raw); }

// Derives (once) the half-resolution companion with the internal bicubic
// factor-2 downscale; reused across QPs and approaches of the sequence.
fs::path ensure_half_source(const ExperimentConfig& cfg, const SequenceSource& seq,
                            const VideoSpec& spec_full) {
  if (seq.path_4k) return *seq.path_4k;
  if (spec_full.width % 4 != 0 || spec_full.height % 4 != 0)
    throw ValidationError("sequence '" + seq.name +
                          "': dimensions must be divisible by 4 to derive the "
                          "half-resolution source");
  fs::path dir = cfg.output_dir / "sources";
  fs::create_directories(dir);
  fs::path out = dir / (seq.name + "_half.y4m");
  const int hw = spec_full.width / 2, hh = spec_full.height / 2;
  if (fs::exists(out)) {
    VideoSpec existing = probe_stream(out);
    if (existing.width == hw && existing.height == hh &&
        existing.frame_count == spec_full.frame_count && existing.bit_depth == spec_full.bit_depth)
      return out;
  }
  auto reader = VideoReader::open(seq.path, seq.raw);
  VideoSpec half = spec_full;
  half.width = hw;
  half.height = hh;
  auto writer = VideoWriter::create(out, half, Container::Y4M);
  for (int64_t i = 0; i < spec_full.frame_count; ++i)
    writer.write_frame(resample_frame(reader.read_frame(i), hw, hh, FilterKind::bicubic()));
  writer.close();
  return out;
}

Bindings video_bindings(const fs::path& input, const VideoSpec& spec) {
  return Bindings{{"input", fs::absolute(input).string()},
                  {"width", std::to_string(spec.width)},
                  {"height", std::to_string(spec.height)},
                  {"fps", fps_binding(spec)},
                  {"frames", std::to_string(spec.frame_count)}};
}

struct EncodeStep {
  fs::path bitstream;
  uint64_t bytes = 0;
  fs::path recon;
};

// Encode + reconstruct: either the encoder template emits {recon} itself or
// a decoder tool maps the bitstream back to video.
EncodeStep encode_and_reconstruct(const CellPlan& plan, const fs::path& input,
                                  const VideoSpec& in_spec, const std::string& tag) {
  const auto& cfg = *plan.cfg;
  const auto& approach = *plan.approach;
  const ToolTemplate& enc = cfg.tool(approach.encoder);

  EncodeStep step;
  step.bitstream = plan.cell_dir / ("bitstream_" + tag + ".bin");
  step.recon = plan.cell_dir / ("recon_" + tag + ".y4m");

  Bindings b = video_bindings(input, in_spec);
  b["output"] = fs::absolute(step.bitstream).string();
  b["qp"] = std::to_string(plan.qp);
  if (template_has_placeholder(enc, "recon")) b["recon"] = fs::absolute(step.recon).string();
  run_tool(enc, b, plan.cell_dir / ("log_encode_" + tag + ".txt"));
  std::error_code ec;
  auto size = fs::file_size(step.bitstream, ec);
  if (ec || size == 0)
    throw ToolError("encoder '" + approach.encoder + "' produced no bitstream for " + tag);
  step.bytes = size;

  if (!template_has_placeholder(enc, "recon")) {
    const ToolTemplate& dec = cfg.tool(approach.decoder);
    Bindings db{{"input", fs::absolute(step.bitstream).string()},
                {"output", fs::absolute(step.recon).string()},
                {"width", std::to_string(in_spec.width)},
                {"height", std::to_string(in_spec.height)},
                {"fps", fps_binding(in_spec)},
                {"frames", std::to_string(in_spec.frame_count)}};
    run_tool(dec, db, plan.cell_dir / ("log_decode_" + tag + ".txt"));
  }
  if (!fs::exists(step.recon))
    throw ToolError("no reconstruction produced for " + tag + " (expected '" +
                    step.recon.string() + "')");
  return step;
}

void score_against(const CellPlan& plan, const fs::path& recon, const fs::path& reference,
                   const std::optional<RawFormat>& ref_raw, std::map<std::string, double>& out) {
  auto ref = VideoReader::open(reference, ref_raw);
  auto dist = VideoReader::open(recon);
  bool want_ssim = false;
  for (const auto& m : plan.cfg->metric_names) want_ssim |= (m == "ssim");
  auto score = score_sequence(ref, dist, PsnrAggregation::MeanOfFramePsnr, want_ssim);
  for (const auto& m : plan.cfg->metric_names) {
    if (m == "psnr_y") out["psnr_y"] = score.psnr_y_mean;
    if (m == "ssim") out["ssim"] = score.ssim_mean;
  }
  out["psnr_y_of_mean_mse"] = score.psnr_y_of_mean_mse;
}

void upscale_internal(const fs::path& input, const fs::path& output, int dst_w, int dst_h,
                      const FilterKind& filter) {
  auto reader = VideoReader::open(input);
  VideoSpec out_spec = reader.spec();
  out_spec.width = dst_w;
  out_spec.height = dst_h;
  auto writer = VideoWriter::create(output, out_spec, Container::Y4M);
  for (int64_t i = 0; i < reader.spec().frame_count; ++i)
    writer.write_frame(resample_frame(reader.read_frame(i), dst_w, dst_h, filter));
  writer.close();
}

void add_artifact(CellResult& result, const std::string& role, const fs::path& path,
                  bool hashed) {
  CellArtifact a;
  a.role = role;
  a.path = path;
  a.bytes = fs::file_size(path);
  a.hash = hashed ? fnv1a_file(path) : 0;
  result.artifacts.push_back(std::move(a));
}

std::string rel_to(const fs::path& base, const fs::path& p) {
  std::error_code ec;
  auto rel = fs::relative(p, base, ec);
  return ec ? p.string() : rel.string();
}

void write_manifest(const ExperimentConfig& cfg, const CellPlan& plan, CellResult& result) {
  ordered_json j;
  j["sequence"] = result.sequence;
  j["approach"] = result.approach;
  j["qp"] = result.qp;
  j["config_hash"] = to_hex(cfg.config_hash(*plan.seq, *plan.approach, plan.qp));
  j["bitrate_mbps"] = result.bitrate_mbps;
  ordered_json comps;
  for (const auto& [k, v] : result.bitrate_components) comps[k] = v;
  j["bitrate_components"] = std::move(comps);
  ordered_json mj;
  for (const auto& [k, v] : result.metrics) mj[k] = v;
  j["metrics"] = std::move(mj);
  if (!result.metrics_4k.empty()) {
    ordered_json m4;
    for (const auto& [k, v] : result.metrics_4k) m4[k] = v;
    j["metrics_4k"] = std::move(m4);
  }
  j["vmaf_available"] = result.vmaf_available;
  if (!result.vmaf_note.empty()) j["vmaf_note"] = result.vmaf_note;
  auto& arts = j["artifacts"] = ordered_json::array();
  for (const auto& a : result.artifacts)
    arts.push_back(ordered_json{{"role", a.role},
                                {"path", rel_to(cfg.output_dir, a.path)},
                                {"bytes", a.bytes},
                                {"hash", to_hex(a.hash)}});
  result.manifest_path = plan.cell_dir / "manifest.json";
  std::ofstream out(result.manifest_path);
  if (!out) throw IoError("cannot write manifest '" + result.manifest_path.string() + "'");
  out << j.dump(2) << "\n";
}

// Attempts to reuse a completed cell: the stored configuration hash must
// match and every artifact must still exist with its recorded size (and
// content hash for bitstream roles).
std::optional<CellResult> try_resume(const ExperimentConfig& cfg, const CellPlan& plan) {
  fs::path manifest = plan.cell_dir / "manifest.json";
  std::ifstream in(manifest);
  if (!in) return std::nullopt;
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception&) {
    return std::nullopt;
  }
  try {
    if (j.at("config_hash").get<std::string>() !=
        to_hex(cfg.config_hash(*plan.seq, *plan.approach, plan.qp)))
      return std::nullopt;
    CellResult r;
    r.sequence = j.at("sequence").get<std::string>();
    r.approach = j.at("approach").get<std::string>();
    r.qp = j.at("qp").get<int>();
    r.bitrate_mbps = j.at("bitrate_mbps").get<double>();
    for (const auto& [k, v] : j.at("bitrate_components").items())
      r.bitrate_components[k] = v.get<double>();
    for (const auto& [k, v] : j.at("metrics").items()) r.metrics[k] = v.get<double>();
    if (j.contains("metrics_4k"))
      for (const auto& [k, v] : j.at("metrics_4k").items()) r.metrics_4k[k] = v.get<double>();
    r.vmaf_available = j.at("vmaf_available").get<bool>();
    if (j.contains("vmaf_note")) r.vmaf_note = j.at("vmaf_note").get<std::string>();
    for (const auto& aj : j.at("artifacts")) {
      CellArtifact a;
      a.role = aj.at("role").get<std::string>();
      a.path = cfg.output_dir / aj.at("path").get<std::string>();
      a.bytes = aj.at("bytes").get<uint64_t>();
      a.hash = std::stoull(aj.at("hash").get<std::string>(), nullptr, 16);
      std::error_code ec;
      auto size = fs::file_size(a.path, ec);
      if (ec || size != a.bytes) return std::nullopt;
      if (a.role.rfind("bitstream", 0) == 0 && a.hash != 0 && fnv1a_file(a.path) != a.hash)
        return std::nullopt;
      r.artifacts.push_back(std::move(a));
    }
    r.manifest_path = manifest;
    r.resumed = true;
    return r;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void run_vmaf_leg(const CellPlan& plan, const fs::path& recon, CellResult& result) {
  const auto& cfg = *plan.cfg;
  bool wants_vmaf = false;
  for (const auto& m : cfg.metric_names) wants_vmaf |= (m == "vmaf");
  if (!wants_vmaf) return;
  if (cfg.vmaf_tool.empty()) {
    result.vmaf_available = false;
    result.vmaf_note = "vmaf requested but no vmaf tool configured";
    return;
  }
  auto score = run_vmaf(plan.seq->path, recon, cfg.tool(cfg.vmaf_tool), plan.cell_dir / "vmaf");
  result.vmaf_available = score.available;
  result.vmaf_note = score.note;
  if (score.available) result.metrics["vmaf"] = score.pooled_mean;
}

CellResult run_cell(const CellPlan& plan) {
  const auto& cfg = *plan.cfg;
  const auto& approach = *plan.approach;

  if (auto resumed = try_resume(cfg, plan)) return *resumed;

  fs::create_directories(plan.cell_dir);
  CellResult result;
  result.sequence = plan.seq->name;
  result.approach = approach.label;
  result.qp = plan.qp;

  switch (approach.kind) {
    case Approach::Simulcast: {
      auto spec_half = probe_stream(plan.src_half);
      auto enc_half = encode_and_reconstruct(plan, plan.src_half, spec_half, "4k");
      auto enc_full = encode_and_reconstruct(plan, plan.src_full, plan.spec_full, "8k");
      double br_half = derive_bitrate_mbps(enc_half.bytes, spec_half);
      double br_full = derive_bitrate_mbps(enc_full.bytes, plan.spec_full);
      result.bitrate_components["4k"] = br_half;
      result.bitrate_components["8k"] = br_full;
      result.bitrate_mbps = br_half + br_full;
      score_against(plan, enc_full.recon, plan.seq->path, plan.seq->raw, result.metrics);
      // Auxiliary backward-compatibility leg: decoded 4K against the 4K source.
      score_against(plan, enc_half.recon, plan.src_half, std::nullopt, result.metrics_4k);
      run_vmaf_leg(plan, enc_full.recon, result);
      add_artifact(result, "bitstream_4k", enc_half.bitstream, true);
      add_artifact(result, "bitstream_8k", enc_full.bitstream, true);
      add_artifact(result, "recon_4k", enc_half.recon, false);
      add_artifact(result, "recon_8k", enc_full.recon, false);
      break;
    }
    case Approach::Scalable: {
      auto enc = encode_and_reconstruct(plan, plan.src_full, plan.spec_full, "layered");
      VideoSpec recon_spec = probe_stream(enc.recon);
      if (recon_spec.width != plan.spec_full.width ||
          recon_spec.height != plan.spec_full.height)
        throw ValidationError("decoded enhancement layer is " +
                              std::to_string(recon_spec.width) + "x" +
                              std::to_string(recon_spec.height) + " but the source is " +
                              std::to_string(plan.spec_full.width) + "x" +
                              std::to_string(plan.spec_full.height) +
                              "; layer mapping is misconfigured");
      result.bitrate_mbps = derive_bitrate_mbps(enc.bytes, plan.spec_full);
      result.bitrate_components["layered"] = result.bitrate_mbps;
      score_against(plan, enc.recon, plan.seq->path, plan.seq->raw, result.metrics);
      run_vmaf_leg(plan, enc.recon, result);
      add_artifact(result, "bitstream_layered", enc.bitstream, true);
      add_artifact(result, "recon_8k", enc.recon, false);
      break;
    }
    case Approach::PrePost: {
      auto spec_half = probe_stream(plan.src_half);
      auto enc = encode_and_reconstruct(plan, plan.src_half, spec_half, "4k");
      fs::path recon_full = plan.cell_dir / "recon_8k.y4m";
      if (is_internal_filter(approach.upscaler)) {
        upscale_internal(enc.recon, recon_full, plan.spec_full.width, plan.spec_full.height,
                         FilterKind::parse(approach.upscaler));
      } else {
        const ToolTemplate& up = cfg.tool(approach.upscaler);
        Bindings b{{"input", fs::absolute(enc.recon).string()},
                   {"output", fs::absolute(recon_full).string()},
                   {"width", std::to_string(plan.spec_full.width)},
                   {"height", std::to_string(plan.spec_full.height)},
                   {"fps", fps_binding(plan.spec_full)},
                   {"frames", std::to_string(spec_half.frame_count)}};
        run_tool(up, b, plan.cell_dir / "log_upscale.txt");
      }
      VideoSpec up_spec = probe_stream(recon_full);
      if (up_spec.width != plan.spec_full.width || up_spec.height != plan.spec_full.height)
        throw ValidationError("upscaled output is " + std::to_string(up_spec.width) + "x" +
                              std::to_string(up_spec.height) + " but the source is " +
                              std::to_string(plan.spec_full.width) + "x" +
                              std::to_string(plan.spec_full.height));
      result.bitrate_mbps = derive_bitrate_mbps(enc.bytes, spec_half);
      result.bitrate_components["4k"] = result.bitrate_mbps;
      score_against(plan, recon_full, plan.seq->path, plan.seq->raw, result.metrics);
      score_against(plan, enc.recon, plan.src_half, std::nullopt, result.metrics_4k);
      run_vmaf_leg(plan, recon_full, result);
      add_artifact(result, "bitstream_4k", enc.bitstream, true);
      add_artifact(result, "recon_4k", enc.recon, false);
      add_artifact(result, "recon_8k", recon_full, false);
      break;
    }
  }
  write_manifest(cfg, plan, result);
  return result;
}

CellPlan make_plan(const ExperimentConfig& cfg, const SequenceSource& seq,
                   const ApproachConfig& approach, int qp, const VideoSpec& spec_full,
                   const fs::path& src_half) {
  CellPlan plan;
  plan.cfg = &cfg;
  plan.seq = &seq;
  plan.approach = &approach;
  plan.qp = qp;
  plan.cell_dir = cfg.output_dir / seq.name / approach.label / qp_dir_name(qp);
  plan.src_full = seq.path;
  plan.spec_full = spec_full;
  plan.src_half = src_half;
  return plan;
}

RDCurve assemble_curve(const SequenceSource& seq, const ApproachConfig& approach,
                       const std::vector<CellResult>& cells,
                       const std::vector<std::string>& metric_names) {
  bool vmaf_everywhere = !cells.empty();
  for (const auto& c : cells) vmaf_everywhere &= c.vmaf_available;
  std::vector<RDPoint> points;
  for (const auto& c : cells) {
    RDPoint p;
    p.bitrate_mbps = c.bitrate_mbps;
    p.qp = c.qp;
    for (const auto& name : metric_names) {
      if (name == "vmaf" && !vmaf_everywhere) continue;
      auto it = c.metrics.find(name);
      if (it == c.metrics.end()) continue;
      if (!std::isfinite(it->second))
        throw ValidationError("cell qp" + std::to_string(c.qp) + " of '" + seq.name + "/" +
                              approach.label + "' has non-finite " + name +
                              " (lossless operating point); it cannot form an RD curve");
      p.metrics[name] = it->second;
    }
    points.push_back(std::move(p));
  }
  return RDCurve::create(seq.name + ":" + approach.label, std::move(points));
}

fs::path write_curve_json(const ExperimentConfig& cfg, const SequenceSource& seq,
                          const ApproachConfig& approach, const RDCurve& curve) {
  ordered_json j = ordered_json::parse(curve_to_json_text(curve));
  ordered_json prov;
  prov["approach"] = to_string(approach.kind);
  ordered_json tools;
  auto add = [&](const std::string& name) {
    if (!name.empty() && cfg.tools.count(name)) tools[name] = cfg.tool(name).executable;
  };
  add(approach.encoder);
  add(approach.decoder);
  if (approach.kind == Approach::PrePost && !is_internal_filter(approach.upscaler))
    add(approach.upscaler);
  if (approach.kind == Approach::PrePost && is_internal_filter(approach.upscaler))
    prov["upscaler"] = approach.upscaler;
  prov["tools"] = std::move(tools);
  j["provenance"] = std::move(prov);
  fs::path out = cfg.output_dir / seq.name / approach.label / "curve.json";
  fs::create_directories(out.parent_path());
  std::ofstream f(out);
  if (!f) throw IoError("cannot write curve '" + out.string() + "'");
  f << j.dump(2) << "\n";
  return out;
}

}  // namespace

ExperimentResult run_approach(const ExperimentConfig& cfg, const SequenceSource& seq,
                              const ApproachConfig& approach) {
  cfg.validate();
  fs::create_directories(cfg.output_dir);
  VideoSpec spec_full = probe_source(seq);
  fs::path src_half;
  if (approach.kind != Approach::Scalable) src_half = ensure_half_source(cfg, seq, spec_full);

  const int n = int(approach.qp_list.size());
  std::vector<CellResult> cells(static_cast<size_t>(n));
  auto errors = run_pool(cfg.workers, n, [&](int i) {
    auto plan = make_plan(cfg, seq, approach, approach.qp_list[size_t(i)], spec_full, src_half);
    cells[size_t(i)] = run_cell(plan);
  });
  for (int i = 0; i < n; ++i)
    if (!errors[size_t(i)].empty())
      throw ToolError("'" + seq.name + "/" + approach.label + "' failed at qp" +
                      std::to_string(approach.qp_list[size_t(i)]) + ": " + errors[size_t(i)]);

  std::sort(cells.begin(), cells.end(),
            [](const CellResult& a, const CellResult& b) { return a.qp < b.qp; });
  ExperimentResult result;
  result.cells = std::move(cells);
  result.curve = assemble_curve(seq, approach, result.cells, cfg.metric_names);
  result.curve_path = write_curve_json(cfg, seq, approach, result.curve);
  return result;
}

namespace {

void require_kind(const ApproachConfig& approach, Approach kind) {
  if (approach.kind != kind)
    throw ValidationError("approach '" + approach.label + "' is " + to_string(approach.kind) +
                          ", expected " + to_string(kind));
}

}  // namespace

ExperimentResult run_simulcast(const ExperimentConfig& cfg, const SequenceSource& seq,
                               const ApproachConfig& approach) {
  require_kind(approach, Approach::Simulcast);
  return run_approach(cfg, seq, approach);
}

ExperimentResult run_scalable(const ExperimentConfig& cfg, const SequenceSource& seq,
                              const ApproachConfig& approach) {
  require_kind(approach, Approach::Scalable);
  return run_approach(cfg, seq, approach);
}

ExperimentResult run_prepost(const ExperimentConfig& cfg, const SequenceSource& seq,
                             const ApproachConfig& approach) {
  require_kind(approach, Approach::PrePost);
  return run_approach(cfg, seq, approach);
}

SweepSummary sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.output_dir);
  const uint64_t invocations_before = tool_invocation_count();

  // Sources are probed and half-res companions derived serially before the
  // parallel phase so concurrent cells never race on shared artifacts.
  std::map<std::string, VideoSpec> full_specs;
  std::map<std::string, fs::path> half_sources;
  for (const auto& seq : cfg.sequences) {
    full_specs[seq.name] = probe_source(seq);
    bool needs_half = false;
    for (const auto& a : cfg.approaches) needs_half |= (a.kind != Approach::Scalable);
    if (needs_half)
      half_sources[seq.name] = ensure_half_source(cfg, seq, full_specs[seq.name]);
  }

  struct Cell {
    const SequenceSource* seq;
    const ApproachConfig* approach;
    int qp;
  };
  std::vector<Cell> cells;
  for (const auto& seq : cfg.sequences)
    for (const auto& approach : cfg.approaches)
      for (int qp : approach.qp_list) cells.push_back({&seq, &approach, qp});

  SweepSummary summary;
  summary.cells_total = int(cells.size());
  std::vector<CellResult> results(cells.size());
  std::vector<char> ok(cells.size(), 0);

  auto errors = run_pool(cfg.workers, int(cells.size()), [&](int i) {
    const Cell& c = cells[size_t(i)];
    fs::path half =
        c.approach->kind != Approach::Scalable ? half_sources.at(c.seq->name) : fs::path();
    auto plan = make_plan(cfg, *c.seq, *c.approach, c.qp, full_specs.at(c.seq->name), half);
    results[size_t(i)] = run_cell(plan);
    ok[size_t(i)] = 1;
  });

  for (size_t i = 0; i < cells.size(); ++i) {
    if (!errors[i].empty()) {
      summary.failures.push_back(cells[i].seq->name + "/" + cells[i].approach->label + "/" +
                                 qp_dir_name(cells[i].qp) + ": " + errors[i]);
    } else if (results[i].resumed) {
      ++summary.cells_skipped;
    } else {
      ++summary.cells_run;
    }
  }

  // Curves for fully successful (sequence, approach) groups.
  for (const auto& seq : cfg.sequences)
    for (const auto& approach : cfg.approaches) {
      std::vector<CellResult> group;
      bool complete = true;
      for (size_t i = 0; i < cells.size(); ++i)
        if (cells[i].seq == &seq && cells[i].approach == &approach) {
          if (!ok[i]) {
            complete = false;
            break;
          }
          group.push_back(results[i]);
        }
      if (!complete || group.empty()) continue;
      std::sort(group.begin(), group.end(),
                [](const CellResult& a, const CellResult& b) { return a.qp < b.qp; });
      auto curve = assemble_curve(seq, approach, group, cfg.metric_names);
      summary.curves.push_back(write_curve_json(cfg, seq, approach, curve));
    }

  summary.tool_invocations = tool_invocation_count() - invocations_before;
  return summary;
}

std::string sweep_summary_to_json(const SweepSummary& s) {
  ordered_json j;
  j["cells_total"] = s.cells_total;
  j["cells_run"] = s.cells_run;
  j["cells_skipped"] = s.cells_skipped;
  j["tool_invocations"] = s.tool_invocations;
  j["failures"] = s.failures;
  auto& curves = j["curves"] = ordered_json::array();
  for (const auto& c : s.curves) curves.push_back(c.string());
  return j.dump(2) + "\n";
}

SrManifest prepare_sr_training_pairs(const std::vector<fs::path>& hr_inputs,
                                     const ToolTemplate& encoder, const std::vector<int>& qps,
                                     const fs::path& out_dir) {
  if (hr_inputs.empty()) throw ValidationError("no HR inputs given");
  if (qps.empty()) throw ValidationError("the QP set for training pairs must not be empty");
  encoder.validate();
  if (encoder.arg_template.find("{recon}") == std::string::npos)
    throw ValidationError("training-pair encoder template must emit {recon}");

  fs::create_directories(out_dir / "lr");
  fs::create_directories(out_dir / "pairs");
  SrManifest manifest;

  for (const auto& hr : hr_inputs) {
    try {
      auto reader = VideoReader::open(hr);
      const VideoSpec spec = reader.spec();
      if (spec.width % 4 != 0 || spec.height % 4 != 0)
        throw ValidationError("dimensions " + std::to_string(spec.width) + "x" +
                              std::to_string(spec.height) +
                              " cannot be halved on a 4:2:0 grid");
      std::string stem = hr.stem().string();
      fs::path lr = out_dir / "lr" / (stem + "_lr.y4m");
      {
        VideoSpec half = spec;
        half.width = spec.width / 2;
        half.height = spec.height / 2;
        auto writer = VideoWriter::create(lr, half, Container::Y4M);
        for (int64_t i = 0; i < spec.frame_count; ++i)
          writer.write_frame(
              resample_frame(reader.read_frame(i), half.width, half.height,
                             FilterKind::bicubic()));
        writer.close();
      }
      VideoSpec lr_spec = probe_stream(lr);
      for (int qp : qps) {
        char tag[16];
        std::snprintf(tag, sizeof(tag), "_qp%02d", qp);
        fs::path bits = out_dir / "pairs" / (stem + tag + ".bin");
        fs::path dec = out_dir / "pairs" / (stem + tag + ".y4m");
        Bindings b = video_bindings(lr, lr_spec);
        b["output"] = fs::absolute(bits).string();
        b["recon"] = fs::absolute(dec).string();
        b["qp"] = std::to_string(qp);
        run_tool(encoder, b, out_dir / "pairs" / (stem + tag + ".log"));
        if (!fs::exists(dec))
          throw ToolError("encoder produced no reconstruction for qp " + std::to_string(qp));
        manifest.pairs.push_back({hr, dec, qp});
      }
    } catch (const std::exception& e) {
      ++manifest.failures;
      std::ofstream log(out_dir / "failures.log", std::ios::app);
      log << hr.string() << ": " << e.what() << "\n";
    }
  }

  ordered_json j;
  auto& pairs = j["pairs"] = ordered_json::array();
  for (const auto& p : manifest.pairs)
    pairs.push_back(ordered_json{{"hr_path", p.hr_path.string()},
                                 {"lr_decoded_path", p.lr_decoded_path.string()},
                                 {"qp", p.qp}});
  j["failures"] = manifest.failures;
  manifest.manifest_path = out_dir / "sr_manifest.json";
  std::ofstream out(manifest.manifest_path);
  out << j.dump(2) << "\n";
  return manifest;
}

}  // namespace rdbench
