#include "rdbench/tool.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "rdbench/error.hpp"
#include "rdbench/mock_codec.hpp"

namespace rdbench {

namespace fs = std::filesystem;

namespace {

const std::set<std::string>& known_placeholders() {
  static const std::set<std::string> names = {"input", "output", "recon", "qp",    "width",
                                              "height", "fps",    "frames", "ref", "dist"};
  return names;
}

// Collects {name} occurrences; validates syntax and the name set.
std::vector<std::string> scan_placeholders(const std::string& text) {
  std::vector<std::string> found;
  size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '{') {
      ++i;
      continue;
    }
    size_t close = text.find('}', i);
    if (close == std::string::npos)
      throw ValidationError("unterminated placeholder in template '" + text + "'");
    std::string name = text.substr(i + 1, close - i - 1);
    if (!known_placeholders().count(name))
      throw ValidationError("unknown placeholder '{" + name + "}' in template '" + text + "'");
    found.push_back(name);
    i = close + 1;
  }
  return found;
}

std::vector<std::string> split_args(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::string last_lines(const fs::path& log, int count) {
  std::ifstream in(log);
  if (!in) return "";
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  std::string tail;
  size_t start = lines.size() > size_t(count) ? lines.size() - size_t(count) : 0;
  for (size_t i = start; i < lines.size(); ++i) tail += lines[i] + "\n";
  return tail;
}

std::atomic<uint64_t> g_invocations{0};

void append_log(const fs::path& log, const std::string& text) {
  std::ofstream out(log, std::ios::app);
  out << text;
}

int spawn_and_wait(const std::vector<std::string>& argv, const fs::path& workdir,
                   const fs::path& log_path, double timeout_s, bool* timed_out) {
  *timed_out = false;
  int logfd = ::open(log_path.string().c_str(), O_CREAT | O_WRONLY | O_APPEND, 0644);
  if (logfd < 0) throw IoError("cannot open log file '" + log_path.string() + "'");

  std::vector<char*> cargv;
  cargv.reserve(argv.size() + 1);
  for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
  cargv.push_back(nullptr);

  pid_t pid = ::fork();
  if (pid < 0) {
    ::close(logfd);
    throw ToolError("fork failed: " + std::string(std::strerror(errno)));
  }
  if (pid == 0) {
    if (!workdir.empty() && ::chdir(workdir.string().c_str()) != 0) _exit(127);
    ::dup2(logfd, STDOUT_FILENO);
    ::dup2(logfd, STDERR_FILENO);
    ::close(logfd);
    ::execvp(cargv[0], cargv.data());
    ::dprintf(STDERR_FILENO, "exec failed for '%s': %s\n", cargv[0], std::strerror(errno));
    _exit(127);
  }
  ::close(logfd);

  const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
  int status = 0;
  for (;;) {
    pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0) throw ToolError("waitpid failed: " + std::string(std::strerror(errno)));
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      *timed_out = true;
      return -1;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return -1;
}

std::string binding_or_throw(const Bindings& b, const std::string& name,
                             const std::string& tool) {
  auto it = b.find(name);
  if (it == b.end())
    throw ValidationError("tool '" + tool + "' uses placeholder '{" + name +
                          "}' with no binding");
  return it->second;
}

// In-process tools sharing the external-tool contract. argv[0] is the
// builtin name; remaining argv entries come from the substituted template.
void run_builtin(const std::string& name, const ToolTemplate& tool, const Bindings& bindings,
                 const fs::path& log_path) {
  auto need = [&](const std::string& key) { return binding_or_throw(bindings, key, tool.name); };
  try {
    if (name == "builtin:mock-encoder") {
      int qp = std::stoi(need("qp"));
      std::optional<fs::path> recon;
      if (bindings.count("recon")) recon = fs::path(bindings.at("recon"));
      mock_encode_file(need("input"), qp, need("output"), recon);
    } else if (name == "builtin:mock-decoder") {
      mock_decode_file(need("input"), need("output"));
    } else if (name == "builtin:mock-layered-encoder") {
      mock_layered_encode_file(need("input"), std::stoi(need("qp")), need("output"));
    } else if (name == "builtin:mock-layered-decoder") {
      mock_layered_decode_file(need("input"), need("output"));
    } else {
      throw ValidationError("unknown builtin tool '" + name + "'");
    }
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    append_log(log_path, std::string(e.what()) + "\n");
    throw ToolError("builtin tool '" + name + "' failed: " + e.what());
  }
  append_log(log_path, name + ": ok\n");
}

}  // namespace

std::vector<std::string> ToolTemplate::validate() const {
  if (executable.empty()) throw ValidationError("tool '" + name + "' has no executable");
  std::set<std::string> names;
  for (const auto& n : scan_placeholders(arg_template)) names.insert(n);
  for (const auto& out : expected_outputs)
    for (const auto& n : scan_placeholders(out)) names.insert(n);
  return {names.begin(), names.end()};
}

std::string substitute_placeholders(const std::string& text, const Bindings& bindings) {
  std::string out;
  size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '{') {
      out.push_back(text[i++]);
      continue;
    }
    size_t close = text.find('}', i);
    if (close == std::string::npos)
      throw ValidationError("unterminated placeholder in '" + text + "'");
    std::string name = text.substr(i + 1, close - i - 1);
    if (!known_placeholders().count(name))
      throw ValidationError("unknown placeholder '{" + name + "}' in '" + text + "'");
    auto it = bindings.find(name);
    if (it == bindings.end())
      throw ValidationError("placeholder '{" + name + "}' is not bound");
    out += it->second;
    i = close + 1;
  }
  return out;
}

uint64_t tool_invocation_count() { return g_invocations.load(); }

ToolRun run_tool(const ToolTemplate& tool, const Bindings& bindings, const fs::path& log_path) {
  tool.validate();
  ToolRun run;
  run.log_path = log_path;
  run.argv.push_back(tool.executable);
  for (const auto& raw : split_args(tool.arg_template))
    run.argv.push_back(substitute_placeholders(raw, bindings));

  if (!log_path.parent_path().empty()) fs::create_directories(log_path.parent_path());

  const auto t0 = std::chrono::steady_clock::now();
  g_invocations.fetch_add(1);

  if (tool.executable.rfind("builtin:", 0) == 0) {
    run_builtin(tool.executable, tool, bindings, log_path);
    run.exit_code = 0;
  } else {
    bool timed_out = false;
    run.exit_code =
        spawn_and_wait(run.argv, tool.workdir, log_path, tool.timeout_s, &timed_out);
    if (timed_out)
      throw ToolError("tool '" + tool.name + "' exceeded its " +
                      std::to_string(tool.timeout_s) + " s timeout and was killed");
  }
  run.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  run.log_tail = last_lines(log_path, 20);

  if (run.exit_code != 0)
    throw ToolError("tool '" + tool.name + "' exited with status " +
                    std::to_string(run.exit_code) + "\n--- log tail ---\n" + run.log_tail);

  for (const auto& out_tpl : tool.expected_outputs) {
    fs::path out = substitute_placeholders(out_tpl, bindings);
    std::error_code ec;
    auto size = fs::file_size(out, ec);
    if (ec || size == 0)
      throw ToolError("tool '" + tool.name + "' did not produce expected output '" +
                      out.string() + "'\n--- log tail ---\n" + run.log_tail);
  }
  return run;
}

double derive_bitrate_mbps(uint64_t bitstream_bytes, const VideoSpec& spec) {
  if (spec.frame_count <= 0)
    throw ValidationError("bitrate derivation needs a positive frame count");
  if (spec.fps_den <= 0 || spec.fps_num <= 0)
    throw ValidationError("bitrate derivation needs a positive frame rate");
  return double(bitstream_bytes) * 8.0 * double(spec.fps_num) /
         (double(spec.fps_den) * double(spec.frame_count) * 1e6);
}

VmafScore run_vmaf(const fs::path& ref, const fs::path& dist, const ToolTemplate& tool,
                   const fs::path& scratch_dir) {
  VmafScore score;
  if (tool.executable.empty()) {
    score.note = "vmaf tool not configured";
    return score;
  }
  // A configured-but-absent executable is a degradation, not a failure.
  if (tool.executable.rfind("builtin:", 0) != 0 && tool.executable.find('/') != std::string::npos &&
      !fs::exists(tool.executable)) {
    score.note = "vmaf executable '" + tool.executable + "' not found";
    return score;
  }

  fs::create_directories(scratch_dir);
  fs::path out_json = scratch_dir / "vmaf.json";
  Bindings b{{"ref", fs::absolute(ref).string()},
             {"dist", fs::absolute(dist).string()},
             {"output", fs::absolute(out_json).string()}};
  run_tool(tool, b, scratch_dir / "vmaf.log");

  std::ifstream in(out_json);
  if (!in) throw ToolError("vmaf tool produced no output JSON at '" + out_json.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ParseError("malformed vmaf JSON: " + std::string(e.what()));
  }

  if (j.contains("frames")) {
    for (const auto& fr : j.at("frames")) {
      if (!fr.contains("metrics") || !fr.at("metrics").contains("vmaf"))
        throw ParseError("vmaf JSON frame entry lacks metrics.vmaf");
      score.per_frame.push_back(fr.at("metrics").at("vmaf").get<double>());
    }
  }
  if (j.contains("pooled_metrics") && j.at("pooled_metrics").contains("vmaf") &&
      j.at("pooled_metrics").at("vmaf").contains("mean")) {
    score.pooled_mean = j.at("pooled_metrics").at("vmaf").at("mean").get<double>();
  } else if (!score.per_frame.empty()) {
    double sum = 0.0;
    for (double v : score.per_frame) sum += v;
    score.pooled_mean = sum / double(score.per_frame.size());
  } else {
    throw ParseError("vmaf JSON carries neither pooled_metrics.vmaf.mean nor frames");
  }
  score.available = true;
  return score;
}

}  // namespace rdbench
