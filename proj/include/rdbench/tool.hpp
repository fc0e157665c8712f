#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rdbench/video.hpp"

namespace rdbench {

// Declarative description of an external executable invocation. arg_template
// is whitespace-split into argv entries; each entry may embed placeholders
// from the known set {input} {output} {recon} {qp} {width} {height} {fps}
// {frames} {ref} {dist}. Unknown placeholder names are rejected at parse
// time; every placeholder present must be bound at invocation.
//
// The pseudo-executable prefix "builtin:" selects an in-process tool
// (builtin:mock-encoder, builtin:mock-decoder, builtin:mock-layered-encoder,
// builtin:mock-layered-decoder), which runs through the same contract:
// bindings, expected outputs, logs, and the invocation counter.
struct ToolTemplate {
  std::string name;
  std::string executable;
  std::string arg_template;
  std::filesystem::path workdir;  // empty: current directory
  double timeout_s = 86400.0;     // reference encoders on 8K are slow
  std::vector<std::string> expected_outputs;  // may embed placeholders

  // Validates placeholder syntax and names; returns the distinct names used.
  std::vector<std::string> validate() const;
};

using Bindings = std::map<std::string, std::string>;

struct ToolRun {
  std::vector<std::string> argv;
  int exit_code = 0;
  double wall_time_s = 0.0;
  std::filesystem::path log_path;
  std::string log_tail;  // last lines, carried into error messages
};

// Substitutes placeholders into one template string.
std::string substitute_placeholders(const std::string& text, const Bindings& bindings);

// Runs the tool to completion with stdout/stderr captured into log_path.
// Throws ToolError on spawn failure, timeout, nonzero exit, or a missing or
// empty expected output. Paths in bindings should be absolute; run_tool does
// not consult the caller's CWD beyond workdir.
ToolRun run_tool(const ToolTemplate& tool, const Bindings& bindings,
                 const std::filesystem::path& log_path);

// Process-wide count of run_tool executions (builtin ones included); lets
// orchestration verify that resumed sweeps re-run nothing.
uint64_t tool_invocation_count();

// bytes * 8 * fps / frames / 1e6, fps as exact rational.
double derive_bitrate_mbps(uint64_t bitstream_bytes, const VideoSpec& spec);

struct VmafScore {
  bool available = false;
  double pooled_mean = 0.0;
  std::vector<double> per_frame;
  std::string note;  // reason when unavailable
};

// Drives an external VMAF tool (bindings {ref} {dist} {output}) and parses
// its JSON output. A missing executable degrades to available=false rather
// than failing the pipeline.
VmafScore run_vmaf(const std::filesystem::path& ref, const std::filesystem::path& dist,
                   const ToolTemplate& tool, const std::filesystem::path& scratch_dir);

}  // namespace rdbench
