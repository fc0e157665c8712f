#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rdbench/bd.hpp"

namespace rdbench {

enum class OutputFormat { Text, Csv, Json };
OutputFormat parse_output_format(const std::string& text);

// Fixed decimal rendering used across tables: BD-SSIM deltas get three
// decimals, everything else two. "-" marks missing/insufficient cells.
std::string format_bd_cell(std::optional<double> value, const std::string& metric,
                           bool rate_percent);

// Rows = sequences, columns = metrics, one BD value per cell; the Average row
// is the unweighted mean over sequences with data.
struct BDMatrix {
  std::string anchor_label;
  std::string test_label;
  bool rate_percent = true;  // BD-rate matrix vs BD-metric matrix
  std::vector<std::string> sequences;
  std::vector<std::string> metrics;
  std::map<std::string, std::map<std::string, std::optional<double>>> cells;

  std::optional<double> average(const std::string& metric) const;
};

std::string render_bd_matrix(const BDMatrix& m, OutputFormat format);

struct IntervalSpec {
  double lo_mbps = 0.0;
  double hi_mbps = 0.0;  // +inf for open-ended
  std::string label;
};

// The paper-style three bitrate bands.
std::vector<IntervalSpec> default_intervals();
IntervalSpec parse_interval(const std::string& text);  // "0:30", "30:80", "80:inf"

// Per-sequence, per-interval BD-metric cells for one or more test methods
// against a common anchor. Missing data renders as "-" and is excluded from
// the per-interval averages.
struct IntervalTable {
  std::string anchor_label;
  std::vector<std::string> methods;  // test labels, column groups
  std::vector<std::string> sequences;
  std::vector<IntervalSpec> intervals;
  std::vector<std::string> metrics;
  // sequence -> interval label -> method -> metric -> value
  std::map<std::string,
           std::map<std::string, std::map<std::string, std::map<std::string, std::optional<double>>>>>
      cells;

  std::optional<double> average(const std::string& interval_label, const std::string& method,
                                const std::string& metric) const;
};

std::string render_interval_table(const IntervalTable& t, OutputFormat format);

// Columnar plot data: first column bitrate_mbps (merged ascending axis), one
// column per curve; rows a curve does not cover carry the gap marker.
std::string emit_curve_plotdata(const std::vector<RDCurve>& curves, const std::string& metric,
                                OutputFormat format);

// Curve collection produced by run/sweep: output_dir/<sequence>/<label>/curve.json.
struct ResultsTree {
  std::map<std::string, std::map<std::string, RDCurve>> curves;  // sequence -> label -> curve
};

ResultsTree load_results_tree(const std::filesystem::path& output_dir);

BDMatrix bd_matrix_from_results(const ResultsTree& tree, const std::string& anchor_label,
                                const std::string& test_label,
                                const std::vector<std::string>& metrics, InterpMode mode);

IntervalTable interval_table_from_results(const ResultsTree& tree,
                                          const std::string& anchor_label,
                                          const std::vector<std::string>& test_labels,
                                          const std::vector<std::string>& metrics,
                                          const std::vector<IntervalSpec>& intervals,
                                          InterpMode mode);

struct ReportBundle {
  std::vector<RDCurve> curves;
  std::optional<BDMatrix> matrix;
  std::optional<IntervalTable> interval_table;
};

std::string render_report(const ReportBundle& bundle, OutputFormat format);

}  // namespace rdbench
