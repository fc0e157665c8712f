#include "rdbench/report.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rdbench/error.hpp"

namespace rdbench {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

int decimals_for(const std::string& metric, bool rate_percent) {
  if (rate_percent) return 2;
  return metric == "ssim" ? 3 : 2;
}

std::string metric_heading(const std::string& metric, bool rate_percent) {
  std::string base = metric == "psnr_y" ? "PSNR-Y" : metric == "ssim" ? "SSIM"
                                      : metric == "vmaf"              ? "VMAF"
                                                                      : metric;
  return rate_percent ? base : "BD-" + base;
}

// Pads to width with spaces (text rendering); csv leaves cells bare.
std::string pad(const std::string& s, size_t width) {
  return s + std::string(width > s.size() ? width - s.size() : 0, ' ');
}

std::string join_row_csv(const std::vector<std::string>& cells) {
  std::string out;
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ",";
    out += cells[i];
  }
  return out + "\n";
}

std::string render_grid(const std::vector<std::vector<std::string>>& rows, OutputFormat format) {
  if (format == OutputFormat::Csv) {
    std::string out;
    for (const auto& r : rows) out += join_row_csv(r);
    return out;
  }
  std::vector<size_t> widths;
  for (const auto& r : rows)
    for (size_t c = 0; c < r.size(); ++c) {
      if (widths.size() <= c) widths.resize(c + 1, 0);
      widths[c] = std::max(widths[c], r[c].size());
    }
  std::string out;
  for (const auto& r : rows) {
    std::string line;
    for (size_t c = 0; c < r.size(); ++c) {
      if (c) line += "  ";
      line += pad(r[c], widths[c]);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

}  // namespace

OutputFormat parse_output_format(const std::string& text) {
  if (text == "text") return OutputFormat::Text;
  if (text == "csv") return OutputFormat::Csv;
  if (text == "json") return OutputFormat::Json;
  throw ValidationError("unknown output format '" + text + "' (expected text, csv, or json)");
}

std::string format_bd_cell(std::optional<double> value, const std::string& metric,
                           bool rate_percent) {
  if (!value) return "-";
  return fixed(*value, decimals_for(metric, rate_percent));
}

std::optional<double> BDMatrix::average(const std::string& metric) const {
  double sum = 0.0;
  int n = 0;
  for (const auto& seq : sequences) {
    auto row = cells.find(seq);
    if (row == cells.end()) continue;
    auto it = row->second.find(metric);
    if (it == row->second.end() || !it->second) continue;
    sum += *it->second;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

std::string render_bd_matrix(const BDMatrix& m, OutputFormat format) {
  if (format == OutputFormat::Json) {
    ordered_json j;
    j["anchor"] = m.anchor_label;
    j["test"] = m.test_label;
    j["kind"] = m.rate_percent ? "bd_rate_percent" : "bd_metric_delta";
    auto& rows = j["rows"] = ordered_json::array();
    for (const auto& seq : m.sequences) {
      ordered_json row;
      row["sequence"] = seq;
      for (const auto& metric : m.metrics) {
        auto it = m.cells.at(seq).find(metric);
        if (it != m.cells.at(seq).end() && it->second)
          row[metric] = *it->second;
        else
          row[metric] = nullptr;
      }
      rows.push_back(std::move(row));
    }
    ordered_json avg;
    for (const auto& metric : m.metrics) {
      auto a = m.average(metric);
      if (a)
        avg[metric] = *a;
      else
        avg[metric] = nullptr;
    }
    j["average"] = std::move(avg);
    return j.dump(2) + "\n";
  }

  std::vector<std::vector<std::string>> rows;
  bool any_missing = false;
  std::vector<std::string> header{"Sequence"};
  for (const auto& metric : m.metrics) header.push_back(metric_heading(metric, m.rate_percent));
  rows.push_back(header);
  for (const auto& seq : m.sequences) {
    std::vector<std::string> row{seq};
    for (const auto& metric : m.metrics) {
      std::optional<double> v;
      auto rit = m.cells.find(seq);
      if (rit != m.cells.end()) {
        auto it = rit->second.find(metric);
        if (it != rit->second.end()) v = it->second;
      }
      any_missing |= !v.has_value();
      row.push_back(format_bd_cell(v, metric, m.rate_percent));
    }
    rows.push_back(std::move(row));
  }
  std::vector<std::string> avg_row{"Average"};
  for (const auto& metric : m.metrics)
    avg_row.push_back(format_bd_cell(m.average(metric), metric, m.rate_percent));
  rows.push_back(std::move(avg_row));

  std::string title = (m.rate_percent ? std::string("BD-rate (%) for ") : std::string("BD for ")) +
                      m.test_label + " compared to " + m.anchor_label;
  std::string out;
  if (format == OutputFormat::Text) out += title + "\n";
  out += render_grid(rows, format);
  if (any_missing && format == OutputFormat::Text)
    out += "note: '-' cells lack data and are excluded from the averages\n";
  return out;
}

std::vector<IntervalSpec> default_intervals() {
  return {{0.0, 30.0, "-30"},
          {30.0, 80.0, "30-80"},
          {80.0, std::numeric_limits<double>::infinity(), "+80"}};
}

IntervalSpec parse_interval(const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos)
    throw ValidationError("interval '" + text + "' must look like lo:hi (hi may be inf)");
  IntervalSpec spec;
  try {
    spec.lo_mbps = std::stod(text.substr(0, colon));
    std::string hi = text.substr(colon + 1);
    spec.hi_mbps = (hi == "inf" || hi == "+inf") ? std::numeric_limits<double>::infinity()
                                                 : std::stod(hi);
  } catch (const std::exception&) {
    throw ValidationError("malformed interval '" + text + "'");
  }
  if (spec.lo_mbps < 0 || !(spec.lo_mbps < spec.hi_mbps))
    throw ValidationError("interval '" + text + "' must satisfy 0 <= lo < hi");
  if (spec.lo_mbps == 0.0 && std::isinf(spec.hi_mbps))
    spec.label = "all";
  else if (spec.lo_mbps == 0.0)
    spec.label = "-" + fixed(spec.hi_mbps, 0);
  else if (std::isinf(spec.hi_mbps))
    spec.label = "+" + fixed(spec.lo_mbps, 0);
  else
    spec.label = fixed(spec.lo_mbps, 0) + "-" + fixed(spec.hi_mbps, 0);
  return spec;
}

std::optional<double> IntervalTable::average(const std::string& interval_label,
                                             const std::string& method,
                                             const std::string& metric) const {
  double sum = 0.0;
  int n = 0;
  for (const auto& seq : sequences) {
    auto s = cells.find(seq);
    if (s == cells.end()) continue;
    auto i = s->second.find(interval_label);
    if (i == s->second.end()) continue;
    auto m = i->second.find(method);
    if (m == i->second.end()) continue;
    auto v = m->second.find(metric);
    if (v == m->second.end() || !v->second) continue;
    sum += *v->second;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

std::string render_interval_table(const IntervalTable& t, OutputFormat format) {
  if (format == OutputFormat::Json) {
    ordered_json j;
    j["anchor"] = t.anchor_label;
    auto& rows = j["rows"] = ordered_json::array();
    auto cell_json = [&](std::optional<double> v) {
      return v ? ordered_json(*v) : ordered_json(nullptr);
    };
    for (const auto& seq : t.sequences)
      for (const auto& interval : t.intervals) {
        ordered_json row;
        row["sequence"] = seq;
        row["interval"] = interval.label;
        for (const auto& method : t.methods) {
          ordered_json mj;
          for (const auto& metric : t.metrics) {
            std::optional<double> v;
            auto s = t.cells.find(seq);
            if (s != t.cells.end()) {
              auto i = s->second.find(interval.label);
              if (i != s->second.end()) {
                auto m = i->second.find(method);
                if (m != i->second.end()) {
                  auto c = m->second.find(metric);
                  if (c != m->second.end()) v = c->second;
                }
              }
            }
            mj[metric] = cell_json(v);
          }
          row[method] = std::move(mj);
        }
        rows.push_back(std::move(row));
      }
    auto& avg = j["average"] = ordered_json::array();
    for (const auto& interval : t.intervals) {
      ordered_json row;
      row["interval"] = interval.label;
      for (const auto& method : t.methods) {
        ordered_json mj;
        for (const auto& metric : t.metrics)
          mj[metric] = cell_json(t.average(interval.label, method, metric));
        row[method] = std::move(mj);
      }
      avg.push_back(std::move(row));
    }
    return j.dump(2) + "\n";
  }

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> group{"", ""};
  std::vector<std::string> header{"Sequence", "Interval"};
  for (const auto& method : t.methods)
    for (size_t k = 0; k < t.metrics.size(); ++k) {
      group.push_back(k == 0 ? method : "");
      header.push_back(metric_heading(t.metrics[k], false));
    }
  rows.push_back(group);
  rows.push_back(header);
  auto fetch = [&](const std::string& seq, const std::string& interval,
                   const std::string& method, const std::string& metric) {
    std::optional<double> v;
    auto s = t.cells.find(seq);
    if (s != t.cells.end()) {
      auto i = s->second.find(interval);
      if (i != s->second.end()) {
        auto m = i->second.find(method);
        if (m != i->second.end()) {
          auto c = m->second.find(metric);
          if (c != m->second.end()) v = c->second;
        }
      }
    }
    return v;
  };
  for (const auto& seq : t.sequences)
    for (size_t ii = 0; ii < t.intervals.size(); ++ii) {
      const auto& interval = t.intervals[ii];
      std::vector<std::string> row{ii == 0 ? seq : "", interval.label};
      for (const auto& method : t.methods)
        for (const auto& metric : t.metrics)
          row.push_back(
              format_bd_cell(fetch(seq, interval.label, method, metric), metric, false));
      rows.push_back(std::move(row));
    }
  for (size_t ii = 0; ii < t.intervals.size(); ++ii) {
    const auto& interval = t.intervals[ii];
    std::vector<std::string> row{ii == 0 ? std::string("Average") : "", interval.label};
    for (const auto& method : t.methods)
      for (const auto& metric : t.metrics)
        row.push_back(
            format_bd_cell(t.average(interval.label, method, metric), metric, false));
    rows.push_back(std::move(row));
  }
  std::string out;
  if (format == OutputFormat::Text)
    out += "BD-metric results per bit-rate interval (Mb/s) against " + t.anchor_label + "\n";
  out += render_grid(rows, format);
  return out;
}

std::string emit_curve_plotdata(const std::vector<RDCurve>& curves, const std::string& metric,
                                OutputFormat format) {
  if (curves.empty()) throw ValidationError("plot data needs at least one curve");
  for (const auto& c : curves) c.metric_values(metric);  // metric must exist everywhere

  std::set<double> rates;
  for (const auto& c : curves)
    for (const auto& p : c.points) rates.insert(p.bitrate_mbps);

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"bitrate_mbps"};
  for (const auto& c : curves) header.push_back(c.label);
  rows.push_back(header);
  for (double rate : rates) {
    std::vector<std::string> row{fixed(rate, 6)};
    for (const auto& c : curves) {
      std::string cell = "-";
      for (const auto& p : c.points)
        if (p.bitrate_mbps == rate) {
          cell = fixed(p.metrics.at(metric), 6);
          break;
        }
      row.push_back(cell);
    }
    rows.push_back(std::move(row));
  }
  if (format == OutputFormat::Text) {
    // gnuplot-style: comment the header row
    auto out = render_grid(rows, format);
    return "# " + out;
  }
  return render_grid(rows, format);
}

ResultsTree load_results_tree(const fs::path& output_dir) {
  if (!fs::exists(output_dir))
    throw IoError("results directory '" + output_dir.string() + "' does not exist");
  ResultsTree tree;
  for (const auto& seq_entry : fs::directory_iterator(output_dir)) {
    if (!seq_entry.is_directory()) continue;
    for (const auto& label_entry : fs::directory_iterator(seq_entry.path())) {
      if (!label_entry.is_directory()) continue;
      fs::path curve = label_entry.path() / "curve.json";
      if (!fs::exists(curve)) continue;
      auto c = curve_from_json_file(curve.string());
      tree.curves[seq_entry.path().filename().string()]
                 [label_entry.path().filename().string()] = std::move(c);
    }
  }
  if (tree.curves.empty())
    throw ValidationError("no curve.json files found under '" + output_dir.string() + "'");
  return tree;
}

BDMatrix bd_matrix_from_results(const ResultsTree& tree, const std::string& anchor_label,
                                const std::string& test_label,
                                const std::vector<std::string>& metrics, InterpMode mode) {
  BDMatrix m;
  m.anchor_label = anchor_label;
  m.test_label = test_label;
  m.metrics = metrics;
  for (const auto& [seq, labels] : tree.curves) {
    auto a = labels.find(anchor_label);
    auto t = labels.find(test_label);
    if (a == labels.end() || t == labels.end()) continue;
    m.sequences.push_back(seq);
    for (const auto& metric : metrics) {
      std::optional<double> v;
      try {
        v = bd_rate(a->second, t->second, metric, mode).value;
      } catch (const ValidationError&) {
        v = std::nullopt;  // metric missing or curves unusable: rendered "-"
      }
      m.cells[seq][metric] = v;
    }
  }
  if (m.sequences.empty())
    throw ValidationError("no sequence carries both '" + anchor_label + "' and '" + test_label +
                          "' curves");
  return m;
}

IntervalTable interval_table_from_results(const ResultsTree& tree,
                                          const std::string& anchor_label,
                                          const std::vector<std::string>& test_labels,
                                          const std::vector<std::string>& metrics,
                                          const std::vector<IntervalSpec>& intervals,
                                          InterpMode mode) {
  IntervalTable t;
  t.anchor_label = anchor_label;
  t.methods = test_labels;
  t.metrics = metrics;
  t.intervals = intervals;
  for (const auto& [seq, labels] : tree.curves) {
    auto a = labels.find(anchor_label);
    if (a == labels.end()) continue;
    bool any = false;
    for (const auto& method : test_labels) any |= labels.count(method) > 0;
    if (!any) continue;
    t.sequences.push_back(seq);
    for (const auto& interval : intervals)
      for (const auto& method : test_labels) {
        auto m = labels.find(method);
        for (const auto& metric : metrics) {
          std::optional<double> v;
          if (m != labels.end()) {
            try {
              auto r = bd_metric_interval(a->second, m->second, metric, interval.lo_mbps,
                                          interval.hi_mbps, mode);
              if (r) v = r->value;
            } catch (const ValidationError&) {
              v = std::nullopt;
            }
          }
          t.cells[seq][interval.label][method][metric] = v;
        }
      }
  }
  if (t.sequences.empty())
    throw ValidationError("no sequence carries the anchor '" + anchor_label + "'");
  return t;
}

std::string render_report(const ReportBundle& bundle, OutputFormat format) {
  if (format == OutputFormat::Json) {
    ordered_json j;
    if (!bundle.curves.empty()) {
      auto& curves = j["curves"] = ordered_json::array();
      for (const auto& c : bundle.curves) curves.push_back(ordered_json::parse(curve_to_json_text(c)));
    }
    if (bundle.matrix)
      j["bd_matrix"] = ordered_json::parse(render_bd_matrix(*bundle.matrix, OutputFormat::Json));
    if (bundle.interval_table)
      j["interval_table"] =
          ordered_json::parse(render_interval_table(*bundle.interval_table, OutputFormat::Json));
    return j.dump(2) + "\n";
  }
  std::string out;
  if (bundle.matrix) out += render_bd_matrix(*bundle.matrix, format) + "\n";
  if (bundle.interval_table) out += render_interval_table(*bundle.interval_table, format) + "\n";
  return out;
}

}  // namespace rdbench
