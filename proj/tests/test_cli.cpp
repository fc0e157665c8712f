#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rdbench/bd.hpp"
#include "rdbench/media_io.hpp"
#include "support.hpp"

using namespace rdbench;
using testsupport::ScratchDir;
using testsupport::make_spec;

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

// Runs the rdbench binary (path from RDBENCH_BIN) with sh -c redirection.
CmdResult run_cli(const std::string& args) {
  const char* bin = std::getenv("RDBENCH_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "RDBENCH_BIN must point at the rdbench binary");
  std::string cmd = std::string(bin) + " " + args + " 2>&1";
  std::FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CmdResult r;
  char buf[4096];
  size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) r.output.append(buf, n);
  int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

void write_curve(const std::filesystem::path& path, const RDCurve& curve) {
  std::ofstream out(path);
  out << curve_to_json_text(curve);
}

RDCurve demo_curve(const std::string& label, double scale) {
  std::vector<RDPoint> pts;
  double rates[] = {10, 20, 40, 80};
  double scores[] = {40, 43, 46, 49};
  for (int i = 0; i < 4; ++i)
    pts.push_back({rates[i] * scale, std::nullopt, {{"psnr_y", scores[i]}}});
  return RDCurve::create(label, std::move(pts));
}

}  // namespace

TEST_CASE("unknown subcommands and flags exit 1 with usage") {
  auto r = run_cli("definitely-not-a-subcommand");
  CHECK(r.exit_code == 1);
  auto r2 = run_cli("bd --anchor a.json --not-a-flag");
  CHECK(r2.exit_code == 1);
  CHECK(r2.output.find("--help") != std::string::npos);
}

TEST_CASE("help exits 0") {
  auto r = run_cli("--help");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("resample") != std::string::npos);
  CHECK(r.output.find("sweep") != std::string::npos);
}

TEST_CASE("bd subcommand prints BDResult json") {
  ScratchDir dir("clibd");
  write_curve(dir / "a.json", demo_curve("anchor", 1.0));
  write_curve(dir / "b.json", demo_curve("test", 2.0));
  auto r = run_cli("bd --anchor " + (dir / "a.json").string() + " --test " +
                   (dir / "b.json").string() + " --metric psnr_y");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("bd_rate_percent") != std::string::npos);
  CHECK(r.output.find("100.0") != std::string::npos);  // 2x inflation

  auto rm = run_cli("bd --kind metric --anchor " + (dir / "a.json").string() + " --test " +
                    (dir / "b.json").string());
  CHECK(rm.exit_code == 0);
  CHECK(rm.output.find("bd_metric_delta") != std::string::npos);

  auto ri = run_cli("bd --kind metric --interval 15:70 --anchor " + (dir / "a.json").string() +
                    " --test " + (dir / "b.json").string());
  CHECK(ri.exit_code == 0);

  auto rbad = run_cli("bd --interval 15:70 --anchor " + (dir / "a.json").string() + " --test " +
                      (dir / "b.json").string());
  CHECK(rbad.exit_code == 1);  // interval without --kind metric
}

TEST_CASE("validation failures exit 1 and can emit json errors") {
  auto r = run_cli("bd --anchor /nonexistent/a.json --test /nonexistent/b.json");
  CHECK(r.exit_code == 1);

  auto rj = run_cli("--json-errors bd --anchor /nonexistent/a.json --test /nonexistent/b.json");
  CHECK(rj.exit_code == 1);
  CHECK(rj.output.find("{\"") != std::string::npos);  // single-line json on stderr
  CHECK(rj.output.find("\"exit\":1") != std::string::npos);
}

TEST_CASE("resample/metrics/siti/mock-codec round trip through files") {
  ScratchDir dir("clipipe");
  VideoSpec spec = make_spec(32, 16, 8, 30, 1);
  write_video(testsupport::textured_clip(spec, 3), dir / "in.y4m", Container::Y4M);

  auto r1 = run_cli("resample --in " + (dir / "in.y4m").string() + " --out " +
                    (dir / "up.y4m").string() + " --width 64 --height 32 --filter lanczos:3");
  CHECK(r1.exit_code == 0);
  CHECK(probe_stream(dir / "up.y4m").width == 64);

  auto r2 = run_cli("mock-codec --mode encode --in " + (dir / "in.y4m").string() + " --qp 30 " +
                    "--out " + (dir / "bits.rdmc").string() + " --recon " +
                    (dir / "recon.y4m").string());
  CHECK(r2.exit_code == 0);

  auto r3 = run_cli("metrics --ref " + (dir / "in.y4m").string() + " --test " +
                    (dir / "recon.y4m").string() + " --out " + (dir / "report.json").string());
  CHECK(r3.exit_code == 0);
  std::ifstream report(dir / "report.json");
  std::stringstream ss;
  ss << report.rdbuf();
  CHECK(ss.str().find("psnr_y_mean") != std::string::npos);
  CHECK(ss.str().find("per_frame") != std::string::npos);

  auto r4 = run_cli("siti --in " + (dir / "in.y4m").string());
  CHECK(r4.exit_code == 0);
  CHECK(r4.output.find("\"si\"") != std::string::npos);

  // Raw input without explicit geometry must fail cleanly.
  std::ofstream raw(dir / "raw.yuv", std::ios::binary);
  raw << std::string(384, 'x');
  raw.close();
  auto r5 = run_cli("siti --in " + (dir / "raw.yuv").string());
  CHECK(r5.exit_code == 1);
  auto r6 = run_cli("siti --in " + (dir / "raw.yuv").string() +
                    " --width 16 --height 16 --bit-depth 8 --fps 30");
  CHECK(r6.exit_code == 0);
}

TEST_CASE("run and sweep against a config; tool failure exits 2") {
  ScratchDir dir("clirun");
  VideoSpec spec = make_spec(32, 16, 8, 30, 1);
  write_video(testsupport::textured_clip(spec, 3), dir / "seq.y4m", Container::Y4M);

  auto config = [&](const std::string& encoder) {
    std::ostringstream js;
    js << R"({
  "output_dir": "out",
  "workers": 2,
  "metrics": ["psnr_y"],
  "sequences": [{"name": "seq", "path": "seq.y4m"}],
  "tools": {
    "enc": {"executable": ")"
       << encoder << R"(", "args": "{input} {qp} {output} {recon}",
            "expected_outputs": ["{output}"]}
  },
  "approaches": [
    {"kind": "simulcast", "encoder": "enc", "qp_list": [32, 37]},
    {"kind": "prepost", "encoder": "enc", "qp_list": [32, 37]}
  ]
})";
    std::ofstream out(dir / "exp.json");
    out << js.str();
  };

  config("builtin:mock-encoder");
  auto r = run_cli("run --config " + (dir / "exp.json").string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("curve.json") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "out/seq/simulcast/curve.json"));
  CHECK(std::filesystem::exists(dir / "out/seq/prepost/qp32/manifest.json"));

  auto rs = run_cli("sweep --config " + (dir / "exp.json").string());
  CHECK(rs.exit_code == 0);
  CHECK(rs.output.find("\"cells_skipped\": 4") != std::string::npos);
  CHECK(rs.output.find("\"tool_invocations\": 0") != std::string::npos);

  auto rr = run_cli("report --results " + (dir / "out").string() +
                    " --anchor simulcast --test prepost --metrics psnr_y --intervals default");
  CHECK(rr.exit_code == 0);
  CHECK(rr.output.find("Average") != std::string::npos);

  auto rp = run_cli("report --results " + (dir / "out").string() + " --plot psnr_y");
  CHECK(rp.exit_code == 0);
  CHECK(rp.output.find("bitrate_mbps") != std::string::npos);

  // Broken tool: exit 2 and the failing cell named.
  config("/nonexistent/encoder");
  auto rf = run_cli("run --config " + (dir / "exp2.json").string());
  CHECK(rf.exit_code == 1);  // config path typo: validation error
  std::filesystem::rename(dir / "exp.json", dir / "exp2.json");
  config("/nonexistent/encoder");
  auto rf2 = run_cli("run --config " + (dir / "exp.json").string());
  CHECK(rf2.exit_code == 2);
  CHECK(rf2.output.find("failed") != std::string::npos);
  CHECK(rf2.output.find("qp") != std::string::npos);
}

TEST_CASE("prepare-sr-data through the cli") {
  ScratchDir dir("clisr");
  VideoSpec spec = make_spec(32, 16, 8, 30, 1);
  write_video(testsupport::textured_clip(spec, 1), dir / "hr1.y4m", Container::Y4M);
  write_video(testsupport::textured_clip(spec, 1, 9), dir / "hr2.y4m", Container::Y4M);
  {
    std::ofstream out(dir / "exp.json");
    out << R"({
  "output_dir": "unused",
  "sequences": [{"name": "hr1", "path": "hr1.y4m"}],
  "tools": {
    "enc": {"executable": "builtin:mock-encoder", "args": "{input} {qp} {output} {recon}",
            "expected_outputs": ["{output}"]}
  },
  "approaches": [{"kind": "simulcast", "encoder": "enc"}]
})";
  }
  auto r = run_cli("prepare-sr-data --config " + (dir / "exp.json").string() +
                   " --encoder enc --hr " + (dir / "hr1.y4m").string() + " --hr " +
                   (dir / "hr2.y4m").string() + " --qps 17,22,27,32,37 --out-dir " +
                   (dir / "sr").string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("pairs: 10") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "sr/sr_manifest.json"));
}
