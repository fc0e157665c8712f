#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rdbench/error.hpp"
#include "rdbench/hash.hpp"
#include "rdbench/pipeline.hpp"
#include "support.hpp"

using namespace rdbench;
using testsupport::ScratchDir;
using testsupport::make_spec;

namespace {

// Writes a small textured source and an experiment config wired to the
// builtin mock codec tools.
struct Fixture {
  ScratchDir dir{"pipeline"};
  VideoSpec spec = make_spec(64, 32, 8, 30, 1);

  Fixture() {
    write_video(testsupport::textured_clip(spec, 6), dir / "seq_full.y4m", Container::Y4M);
  }

  ExperimentConfig config(std::vector<ApproachConfig> approaches,
                          std::vector<std::string> metrics = {"psnr_y"}) {
    ExperimentConfig cfg;
    cfg.sequences.push_back({"seqA", dir / "seq_full.y4m", std::nullopt, std::nullopt});
    ToolTemplate enc{"enc", "builtin:mock-encoder", "{input} {qp} {output} {recon}", {}, 60.0,
                     {"{output}", "{recon}"}};
    ToolTemplate lenc{"lenc", "builtin:mock-layered-encoder", "{input} {qp} {output}", {}, 60.0,
                      {"{output}"}};
    ToolTemplate ldec{"ldec", "builtin:mock-layered-decoder", "{input} {output}", {}, 60.0,
                      {"{output}"}};
    cfg.tools = {{"enc", enc}, {"lenc", lenc}, {"ldec", ldec}};
    cfg.approaches = std::move(approaches);
    cfg.metric_names = std::move(metrics);
    cfg.output_dir = dir / "out";
    cfg.workers = 2;
    return cfg;
  }
};

ApproachConfig simulcast_approach(std::vector<int> qps = {27, 32, 37, 42}) {
  ApproachConfig a;
  a.kind = Approach::Simulcast;
  a.label = "simulcast";
  a.encoder = "enc";
  a.qp_list = std::move(qps);
  return a;
}

ApproachConfig prepost_approach(std::vector<int> qps = {27, 32, 37, 42}) {
  ApproachConfig a;
  a.kind = Approach::PrePost;
  a.label = "prepost";
  a.encoder = "enc";
  a.upscaler = "lanczos:3";
  a.qp_list = std::move(qps);
  return a;
}

ApproachConfig scalable_approach(std::vector<int> qps = {27, 32, 37, 42}) {
  ApproachConfig a;
  a.kind = Approach::Scalable;
  a.label = "scalable";
  a.encoder = "lenc";
  a.decoder = "ldec";
  a.qp_list = std::move(qps);
  return a;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("default qp ladders follow the protocol") {
  CHECK(default_qp_list(Approach::Scalable) == std::vector<int>{22, 27, 32, 37});
  CHECK(default_qp_list(Approach::Simulcast) == std::vector<int>{22, 27, 32, 37, 42});
  CHECK(default_qp_list(Approach::PrePost) == std::vector<int>{17, 22, 27, 32, 37});
}

TEST_CASE("simulcast accounting sums the two streams exactly") {
  Fixture fx;
  auto cfg = fx.config({simulcast_approach()});
  auto result = run_simulcast(cfg, cfg.sequences[0], cfg.approaches[0]);

  REQUIRE(result.cells.size() == 4);
  for (const auto& cell : result.cells) {
    REQUIRE(cell.bitrate_components.count("4k"));
    REQUIRE(cell.bitrate_components.count("8k"));
    CHECK(cell.bitrate_mbps ==
          cell.bitrate_components.at("4k") + cell.bitrate_components.at("8k"));
    CHECK(cell.metrics.count("psnr_y"));
    CHECK(cell.metrics_4k.count("psnr_y"));  // auxiliary backward-compat leg
  }
  CHECK(result.curve.points.size() == 4);
  CHECK(std::filesystem::exists(result.curve_path));

  // The derived half-resolution source is created once and reused.
  auto half = cfg.output_dir / "sources" / "seqA_half.y4m";
  CHECK(std::filesystem::exists(half));
  auto spec_half = probe_stream(half);
  CHECK(spec_half.width == 32);
  CHECK(spec_half.height == 16);
}

TEST_CASE("prepost accounting uses only the half-resolution stream") {
  Fixture fx;
  auto cfg = fx.config({simulcast_approach({27, 32}), prepost_approach({27, 32})});
  auto sim = run_simulcast(cfg, cfg.sequences[0], cfg.approaches[0]);
  auto pre = run_prepost(cfg, cfg.sequences[0], cfg.approaches[1]);

  for (const auto& cell : pre.cells) {
    CHECK(cell.bitrate_mbps == cell.bitrate_components.at("4k"));
    CHECK(cell.bitrate_components.size() == 1);
  }
  // At equal QP the prepost rate must be strictly below the simulcast rate.
  for (size_t i = 0; i < pre.cells.size(); ++i)
    CHECK(pre.cells[i].bitrate_mbps < sim.cells[i].bitrate_mbps);
}

TEST_CASE("scalable accounting uses the single layered bitstream") {
  Fixture fx;
  auto cfg = fx.config({scalable_approach({27, 32}), simulcast_approach({27, 32})});
  auto sc = run_scalable(cfg, cfg.sequences[0], cfg.approaches[0]);
  auto sim = run_simulcast(cfg, cfg.sequences[0], cfg.approaches[1]);

  REQUIRE(sc.cells.size() == 2);
  for (const auto& cell : sc.cells) {
    CHECK(cell.bitrate_components.size() == 1);
    CHECK(cell.bitrate_mbps == cell.bitrate_components.at("layered"));
  }
  // The layered stub concatenates the two mock streams, so its bitrate equals
  // the simulcast sum at the same QP (accounting parity check).
  for (size_t i = 0; i < sc.cells.size(); ++i)
    CHECK(sc.cells[i].bitrate_mbps == doctest::Approx(sim.cells[i].bitrate_mbps).epsilon(1e-12));
}

TEST_CASE("prepost with a lossless-capable mock encode matches pure resampling error") {
  // With qp 4 (step 1) the codec is transparent: the reconstruction error is
  // exactly the downscale+upscale error.
  Fixture fx;
  auto cfg = fx.config({prepost_approach({4})});
  auto pre = run_prepost(cfg, cfg.sequences[0], cfg.approaches[0]);

  auto reader = VideoReader::open(fx.dir / "seq_full.y4m");
  double mse_sum = 0;
  for (int64_t i = 0; i < reader.spec().frame_count; ++i) {
    auto frame = reader.read_frame(i);
    auto down = resample_frame(frame, 32, 16, FilterKind::bicubic());
    auto up = resample_frame(down, 64, 32, FilterKind::lanczos(3));
    mse_sum += mse_y(frame, up);
  }
  double expect_psnr = psnr_from_mse(mse_sum / double(reader.spec().frame_count), 255);
  // mean-of-frame psnr vs psnr-of-mean-mse differ; compare the recorded
  // psnr_y_of_mean_mse which matches this aggregate exactly.
  CHECK(pre.cells[0].metrics.at("psnr_y_of_mean_mse") ==
        doctest::Approx(expect_psnr).epsilon(1e-12));
}

TEST_CASE("sweep executes the full grid, resumes, and isolates failures") {
  Fixture fx;
  auto cfg = fx.config({simulcast_approach({27, 32}), prepost_approach({27, 32})});

  auto first = sweep(cfg);
  CHECK(first.cells_total == 4);
  CHECK(first.cells_run == 4);
  CHECK(first.cells_skipped == 0);
  CHECK(first.failures.empty());
  CHECK(first.tool_invocations > 0);
  CHECK(first.curves.size() == 2);

  // Resume: nothing re-runs, zero tool invocations.
  auto second = sweep(cfg);
  CHECK(second.cells_run == 0);
  CHECK(second.cells_skipped == 4);
  CHECK(second.tool_invocations == 0);

  // Byte-identical curve JSON across runs.
  auto curve_text_a = slurp(first.curves[0]);
  auto third = sweep(cfg);
  CHECK(slurp(third.curves[0]) == curve_text_a);

  // Changing the configuration invalidates the resume hash.
  auto cfg2 = cfg;
  cfg2.tools.at("enc").arg_template = "{input} {qp} {output} {recon} ";
  auto fourth = sweep(cfg2);
  CHECK(fourth.cells_run == 4);
}

TEST_CASE("sweep isolates per-cell failures and completes the rest") {
  Fixture fx;
  auto broken = simulcast_approach({27, 32});
  broken.label = "broken";
  auto cfg = fx.config({broken, prepost_approach({27})});
  cfg.tools.at("enc").expected_outputs.push_back("{output}.missing");
  // Only the prepost cells can survive? No: both approaches share the encoder,
  // so break the simulcast decoder path instead via a bad layered tool.
  cfg = fx.config({scalable_approach({27, 32}), prepost_approach({27})});
  cfg.tools.at("ldec").executable = "/nonexistent/ldec";

  auto summary = sweep(cfg);
  CHECK(summary.failures.size() == 2);
  for (const auto& f : summary.failures) CHECK(f.find("scalable") != std::string::npos);
  CHECK(summary.cells_run >= 1);
  CHECK(summary.curves.size() == 1);  // prepost curve still written
}

TEST_CASE("run_approach names the failing qp") {
  Fixture fx;
  auto cfg = fx.config({scalable_approach({27})});
  cfg.tools.at("lenc").executable = "/nonexistent/encoder";
  try {
    run_scalable(cfg, cfg.sequences[0], cfg.approaches[0]);
    FAIL("expected ToolError");
  } catch (const ToolError& e) {
    CHECK(std::string(e.what()).find("qp27") != std::string::npos);
  }
}

TEST_CASE("curve json from the pipeline parses into the bd schema") {
  Fixture fx;
  auto cfg = fx.config({simulcast_approach()});
  auto result = run_simulcast(cfg, cfg.sequences[0], cfg.approaches[0]);
  auto curve = curve_from_json_file(result.curve_path.string());
  CHECK(curve.label == "seqA:simulcast");
  CHECK(curve.points.size() == 4);
  CHECK(curve.points[0].qp.has_value());
  // Strictly increasing bitrate, strictly increasing psnr (mock codec RD).
  for (size_t i = 0; i + 1 < curve.points.size(); ++i) {
    CHECK(curve.points[i].bitrate_mbps < curve.points[i + 1].bitrate_mbps);
    CHECK(curve.points[i].metrics.at("psnr_y") < curve.points[i + 1].metrics.at("psnr_y"));
  }
}

TEST_CASE("experiment config json round trip with validation") {
  ScratchDir dir("cfg");
  VideoSpec spec = make_spec(32, 16, 8, 30, 1);
  write_video(testsupport::textured_clip(spec, 2), dir / "s.y4m", Container::Y4M);
  std::string json = R"({
    "output_dir": "results",
    "workers": 3,
    "metrics": ["psnr_y", "ssim"],
    "sequences": [{"name": "s", "path": "s.y4m"}],
    "tools": {
      "enc": {"executable": "builtin:mock-encoder", "args": "{input} {qp} {output} {recon}",
              "expected_outputs": ["{output}"], "timeout_s": 120}
    },
    "approaches": [
      {"kind": "simulcast", "encoder": "enc"},
      {"kind": "prepost", "encoder": "enc", "upscaler": "lanczos:3", "qp_list": [17, 27]}
    ]
  })";
  auto cfg = experiment_config_from_json(json, dir.path());
  CHECK(cfg.workers == 3);
  CHECK(cfg.sequences[0].path == dir / "s.y4m");
  CHECK(cfg.approaches[0].qp_list == std::vector<int>{22, 27, 32, 37, 42});  // default + 42
  CHECK(cfg.approaches[1].qp_list == std::vector<int>{17, 27});
  CHECK(cfg.tools.at("enc").timeout_s == 120.0);

  CHECK_THROWS_AS(experiment_config_from_json("{", dir.path()), ParseError);
  CHECK_THROWS_AS(experiment_config_from_json(R"({"output_dir": "o", "sequences": [],
                  "approaches": []})",
                                              dir.path()),
                  ParseError);

  // Missing decoder with a non-recon encoder is caught at validation.
  std::string bad = R"({
    "output_dir": "results",
    "sequences": [{"name": "s", "path": "s.y4m"}],
    "tools": {"enc": {"executable": "builtin:mock-encoder", "args": "{input} {qp} {output}"}},
    "approaches": [{"kind": "simulcast", "encoder": "enc"}]
  })";
  CHECK_THROWS_AS(experiment_config_from_json(bad, dir.path()), ValidationError);
}

TEST_CASE("qp list limits are enforced") {
  Fixture fx;
  auto tooMany = simulcast_approach({1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
  auto cfg = fx.config({tooMany});
  CHECK_THROWS_AS(cfg.validate(), ValidationError);

  auto outOfRange = simulcast_approach({27, 60});
  auto cfg2 = fx.config({outOfRange});
  CHECK_THROWS_AS(cfg2.validate(), ValidationError);
}

TEST_CASE("prepare_sr_training_pairs builds the LR/HR manifest") {
  ScratchDir dir("srpairs");
  VideoSpec spec = make_spec(32, 16, 8, 30, 1);
  write_video(testsupport::textured_clip(spec, 1, 1), dir / "hr_a.y4m", Container::Y4M);
  write_video(testsupport::textured_clip(spec, 1, 2), dir / "hr_b.y4m", Container::Y4M);
  // An odd item that cannot be halved on the 4:2:0 grid: 18x10.
  VideoSpec odd = make_spec(18, 10, 8, 30, 1);
  write_video(testsupport::textured_clip(odd, 1, 3), dir / "hr_odd.y4m", Container::Y4M);

  ToolTemplate enc{"enc", "builtin:mock-encoder", "{input} {qp} {output} {recon}", {}, 60.0,
                   {"{output}", "{recon}"}};
  auto manifest = prepare_sr_training_pairs(
      {dir / "hr_a.y4m", dir / "hr_b.y4m", dir / "hr_odd.y4m"}, enc,
      {17, 22, 27, 32, 37}, dir / "out");

  CHECK(manifest.pairs.size() == 10);  // 2 usable items x 5 QPs
  CHECK(manifest.failures == 1);
  CHECK(std::filesystem::exists(manifest.manifest_path));
  for (const auto& p : manifest.pairs) {
    CHECK(std::filesystem::exists(p.lr_decoded_path));
    auto lr_spec = probe_stream(p.lr_decoded_path);
    CHECK(lr_spec.width == 16);
    CHECK(lr_spec.height == 8);
  }

  CHECK_THROWS_AS(prepare_sr_training_pairs({dir / "hr_a.y4m"}, enc, {}, dir / "out2"),
                  ValidationError);
}

TEST_CASE("external-process tools work through the same pipeline") {
  // Exercises the real spawn path with the rdbench binary as the encoder.
  const char* bin = std::getenv("RDBENCH_BIN");
  if (!bin) return;  // only meaningful under ctest

  Fixture fx;
  auto cfg = fx.config({simulcast_approach({32, 37})});
  ToolTemplate ext{"ext-enc", bin,
                   "mock-codec --mode encode --in {input} --qp {qp} --out {output} --recon "
                   "{recon}",
                   {}, 120.0, {"{output}", "{recon}"}};
  cfg.tools["enc"] = ext;
  auto result = run_simulcast(cfg, cfg.sequences[0], cfg.approaches[0]);
  CHECK(result.cells.size() == 2);
  CHECK(result.curve.points.size() == 2);
}
