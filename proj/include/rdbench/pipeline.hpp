#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rdbench/bd.hpp"
#include "rdbench/media_io.hpp"
#include "rdbench/metrics.hpp"
#include "rdbench/resample.hpp"
#include "rdbench/tool.hpp"

namespace rdbench {

enum class Approach { Simulcast, Scalable, PrePost };

Approach parse_approach(const std::string& text);
std::string to_string(Approach a);

// Default QP ladders: the base grid {22,27,32,37}, extended by 42 for
// simulcast and by 17 for the pre/post pipeline so the approaches cover a
// similar bitrate span.
std::vector<int> default_qp_list(Approach a);

struct SequenceSource {
  std::string name;
  std::filesystem::path path;                   // full-resolution source
  std::optional<std::filesystem::path> path_4k; // half-resolution; derived when absent
  std::optional<RawFormat> raw;                 // required for raw sources
};

struct ApproachConfig {
  Approach kind = Approach::Simulcast;
  std::string label;    // defaults to the approach name
  std::string encoder;  // tool name (simulcast/prepost: single-layer; scalable: layered)
  std::string decoder;  // optional when the encoder template emits {recon}
  // PrePost only: either an internal filter spec ("lanczos:3", "bicubic:-0.5")
  // or the name of a configured upscaler tool mapping an LR file to an HR file.
  std::string upscaler = "lanczos:3";
  std::vector<int> qp_list;  // empty: default_qp_list(kind)
};

struct ExperimentConfig {
  std::vector<SequenceSource> sequences;
  std::map<std::string, ToolTemplate> tools;
  std::vector<ApproachConfig> approaches;
  std::vector<std::string> metric_names{"psnr_y", "ssim"};
  std::string vmaf_tool;  // optional tool name; absent tool degrades per run_vmaf
  std::filesystem::path output_dir;
  int workers = 1;

  void validate() const;
  const ToolTemplate& tool(const std::string& name) const;
  uint64_t config_hash(const SequenceSource& seq, const ApproachConfig& approach, int qp) const;
};

ExperimentConfig experiment_config_from_json(const std::string& text,
                                             const std::filesystem::path& base_dir);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct CellArtifact {
  std::string role;  // "bitstream_4k", "recon_8k", ...
  std::filesystem::path path;
  uint64_t bytes = 0;
  uint64_t hash = 0;  // fnv1a of the file, recorded for bitstream roles
};

struct CellResult {
  std::string sequence;
  std::string approach;
  int qp = 0;
  double bitrate_mbps = 0.0;
  std::map<std::string, double> bitrate_components;
  std::map<std::string, double> metrics;     // against the original full-res source
  std::map<std::string, double> metrics_4k;  // auxiliary backward-compatibility leg
  bool vmaf_available = false;
  std::string vmaf_note;
  std::vector<CellArtifact> artifacts;
  std::filesystem::path manifest_path;
  bool resumed = false;
};

struct ExperimentResult {
  RDCurve curve;
  std::vector<CellResult> cells;
  std::filesystem::path curve_path;
};

// Runs one (sequence, approach) experiment across its QP list: encodes,
// decodes, measures, applies the approach's rate accounting, and writes the
// per-cell manifests plus the curve JSON. Cells whose manifests already
// match the configuration are reused without tool invocations.
ExperimentResult run_approach(const ExperimentConfig& cfg, const SequenceSource& seq,
                              const ApproachConfig& approach);

ExperimentResult run_simulcast(const ExperimentConfig& cfg, const SequenceSource& seq,
                               const ApproachConfig& approach);
ExperimentResult run_scalable(const ExperimentConfig& cfg, const SequenceSource& seq,
                              const ApproachConfig& approach);
ExperimentResult run_prepost(const ExperimentConfig& cfg, const SequenceSource& seq,
                             const ApproachConfig& approach);

struct SweepSummary {
  int cells_total = 0;
  int cells_run = 0;
  int cells_skipped = 0;
  uint64_t tool_invocations = 0;
  std::vector<std::string> failures;  // "<seq>/<approach>/qp<NN>: message"
  std::vector<std::filesystem::path> curves;
};

// Executes every (sequence, approach, qp) cell with a bounded worker pool.
// Independent failures are isolated and reported in the summary.
SweepSummary sweep(const ExperimentConfig& cfg);

std::string sweep_summary_to_json(const SweepSummary& s);

struct SrPair {
  std::filesystem::path hr_path;
  std::filesystem::path lr_decoded_path;
  int qp = 0;
};

struct SrManifest {
  std::vector<SrPair> pairs;
  int failures = 0;
  std::filesystem::path manifest_path;
};

// LR/HR training-pair preparation: bicubic factor-2 downscale of each HR
// item, encode at each QP with an intra-configured encoder whose template
// emits {recon}, pair the decoded LR with its HR origin. Per-item failures
// are logged and skipped; the failure count lands in the manifest.
SrManifest prepare_sr_training_pairs(const std::vector<std::filesystem::path>& hr_inputs,
                                     const ToolTemplate& encoder, const std::vector<int>& qps,
                                     const std::filesystem::path& out_dir);

}  // namespace rdbench
