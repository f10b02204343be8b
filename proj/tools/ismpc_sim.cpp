// ismpc_sim: scenario runner.
//
//   ismpc_sim run <config.json> -o <dir> [--qp-dump <sample>] [--no-plots]
//   ismpc_sim compare <a.json> <b.json> -o <dir> [--after <seconds>]
//   ismpc_sim batch <config.json>... -o <dir> [-j <jobs>]
//   ismpc_sim validate <config.json>...
//
// Exit codes: 0 success (an infeasible or diverged run is a recorded outcome),
// 2 configuration or usage error, 3 internal error. Errors are reported on
// stderr as one JSON object. ISMPC_VERBOSITY: 0 silent, 1 summary lines
// (default), 2 adds per-file detail.

#include "ismpc/qp.hpp"
#include "ismpc/scenario_config.hpp"
#include "ismpc/simulation.hpp"
#include "ismpc/svg_plot.hpp"
#include "ismpc/trace_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInternal = 3;

int verbosity() {
  const char* v = std::getenv("ISMPC_VERBOSITY");
  if (!v || !*v) return 1;
  return std::atoi(v);
}

std::mutex io_mutex;

void info(int level, const std::string& msg) {
  if (verbosity() < level) return;
  std::lock_guard lock(io_mutex);
  std::cout << msg << '\n';
}

struct CliError {
  int code;
  json body;
};

[[noreturn]] void configError(const std::string& file, const std::string& path, const std::string& message) {
  throw CliError{kExitConfig, {{"error", "config"}, {"file", file}, {"path", path}, {"message", message}}};
}

[[noreturn]] void internalError(const std::string& message) {
  throw CliError{kExitInternal, {{"error", "internal"}, {"message", message}}};
}

ismpc::ScenarioConfig load(const std::string& file) {
  try {
    return ismpc::loadScenarioConfig(file);
  } catch (const ismpc::ConfigError& e) {
    configError(file, e.path(), e.what());
  } catch (const std::invalid_argument& e) {
    configError(file, "", e.what());
  }
}

void writeFile(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) internalError("cannot write " + path.string());
}

template <typename F>
void writeStream(const fs::path& path, F&& fill) {
  std::ofstream out(path, std::ios::binary);
  fill(out);
  if (!out) internalError("cannot write " + path.string());
}

void makeDir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) internalError("cannot create " + dir.string() + ": " + ec.message());
}

struct RunOptions {
  std::optional<int> qp_dump_sample;
  bool plots = true;
};

ismpc::ScenarioResult runOne(const ismpc::ScenarioConfig& config, const fs::path& out_dir, const RunOptions& opt) {
  makeDir(out_dir);
  ismpc::IterationHook hook;
  if (opt.qp_dump_sample) {
    const int target = *opt.qp_dump_sample;
    hook = [target, &out_dir](int k, const ismpc::MpcController& mpc, const ismpc::MpcSolution&) {
      if (k == target) writeStream(out_dir / "qp_dump.txt", [&](std::ostream& os) { ismpc::writeQpDump(os, mpc.lastProblem()); });
    };
  }
  const ismpc::ScenarioResult result = ismpc::runScenario(config, hook);

  writeStream(out_dir / "trace.csv", [&](std::ostream& os) { ismpc::writeTraceCsv(os, result); });
  writeFile(out_dir / "summary.json", ismpc::summaryJson(result, ismpc::scenarioConfigToJson(config)) + "\n");
  writeStream(out_dir / "diagnostics.jsonl", [&](std::ostream& os) { ismpc::writeDiagnosticsJsonl(os, result); });
  if (opt.plots) {
    writeFile(out_dir / "gait.svg", ismpc::gaitPlotSvg(result));
    writeFile(out_dir / "disturbance.svg", ismpc::disturbancePlotSvg(result));
    writeFile(out_dir / "divergence.svg", ismpc::divergencePlotSvg(result));
  }
  const ismpc::RunMetrics m = ismpc::computeMetrics(result);
  info(1, config.name + ": " + result.termination.toString() + " after " + std::to_string(result.samples.size()) +
              " samples, max |x_u - x_z| = " + std::to_string(m.max_divergence.maxCoeff()));
  info(2, "  wrote " + out_dir.string());
  return result;
}

int cmdRun(const std::string& file, const std::string& out, const RunOptions& opt) {
  runOne(load(file), out, opt);
  return kExitOk;
}

int cmdCompare(const std::string& file_a, const std::string& file_b, const std::string& out, double after) {
  const ismpc::ScenarioConfig ca = load(file_a);
  const ismpc::ScenarioConfig cb = load(file_b);
  const fs::path dir(out);
  const std::string name_a = ca.name == cb.name ? ca.name + "_a" : ca.name;
  const std::string name_b = ca.name == cb.name ? cb.name + "_b" : cb.name;
  const ismpc::ScenarioResult ra = runOne(ca, dir / name_a, {});
  const ismpc::ScenarioResult rb = runOne(cb, dir / name_b, {});
  const ismpc::TraceDifference d = ismpc::compareTraces(ra, rb, after);
  json j = {{"a", {{"name", ca.name}, {"termination", ra.termination.toString()}}},
            {"b", {{"name", cb.name}, {"termination", rb.termination.toString()}}},
            {"compared_samples", d.compared_samples},
            {"max_com_difference", d.max_com},
            {"rms_com_difference", d.rms_com},
            {"after_time", d.after_time},
            {"max_com_difference_after", d.max_com_after}};
  writeFile(dir / "compare.json", j.dump(2) + "\n");
  writeFile(dir / "overlay.svg", ismpc::gaitPlotSvg(ra, &rb));
  info(1, "compare: max " + std::to_string(d.max_com) + " m, rms " + std::to_string(d.rms_com) + " m, max after " +
              std::to_string(after) + " s " + std::to_string(d.max_com_after) + " m");
  return kExitOk;
}

int cmdBatch(const std::vector<std::string>& files, const std::string& out, int jobs) {
  // Validate everything first so a bad file fails the batch before any work.
  std::vector<ismpc::ScenarioConfig> configs;
  for (const auto& f : files) configs.push_back(load(f));
  const fs::path dir(out);
  makeDir(dir);

  std::vector<json> entries(configs.size());
  std::vector<std::optional<CliError>> errors(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i; (i = next++) < configs.size();) {
      try {
        const ismpc::ScenarioResult r = runOne(configs[i], dir / configs[i].name, {});
        entries[i] = {{"file", files[i]}, {"name", configs[i].name}, {"termination", r.termination.toString()}};
      } catch (const CliError& e) {
        errors[i] = e;
      } catch (const std::exception& e) {
        errors[i] = CliError{kExitInternal, {{"error", "internal"}, {"file", files[i]}, {"message", e.what()}}};
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(configs.size())));
  {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (e) throw *e;
  writeFile(dir / "batch.json", json(entries).dump(2) + "\n");
  return kExitOk;
}

int cmdValidate(const std::vector<std::string>& files) {
  for (const auto& f : files) {
    const ismpc::ScenarioConfig c = load(f);
    info(1, f + ": ok (" + c.name + ", " + std::to_string(c.samples()) + " samples)");
    info(2, ismpc::scenarioConfigToJson(c));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IS-MPC gait simulator"};
  app.require_subcommand(1);

  std::string out_dir;
  std::string config_a, config_b;
  std::vector<std::string> files;
  RunOptions run_opt;
  int qp_dump = -1;
  bool no_plots = false;
  double after = 2.0;
  int jobs = 1;

  CLI::App* run = app.add_subcommand("run", "Run one scenario and write trace, summary, diagnostics and plots");
  run->add_option("config", config_a, "Scenario file")->required();
  run->add_option("-o,--out", out_dir, "Output directory")->required();
  run->add_option("--qp-dump", qp_dump, "Write the QP of this sample to qp_dump.txt");
  run->add_flag("--no-plots", no_plots, "Skip SVG output");

  CLI::App* compare = app.add_subcommand("compare", "Run two scenarios and report CoM trace differences");
  compare->add_option("a", config_a, "First scenario")->required();
  compare->add_option("b", config_b, "Second scenario")->required();
  compare->add_option("-o,--out", out_dir, "Output directory")->required();
  compare->add_option("--after", after, "Start time of the late-window metric (s)");

  CLI::App* batch = app.add_subcommand("batch", "Run several scenarios");
  batch->add_option("configs", files, "Scenario files")->required();
  batch->add_option("-o,--out", out_dir, "Output directory")->required();
  batch->add_option("-j,--jobs", jobs, "Parallel scenarios")->check(CLI::PositiveNumber);

  CLI::App* validate = app.add_subcommand("validate", "Check scenario files");
  validate->add_option("configs", files, "Scenario files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", "usage"}, {"message", e.what()}}.dump() << '\n';
    return kExitConfig;
  }

  try {
    if (qp_dump >= 0) run_opt.qp_dump_sample = qp_dump;
    run_opt.plots = !no_plots;
    if (*run) return cmdRun(config_a, out_dir, run_opt);
    if (*compare) return cmdCompare(config_a, config_b, out_dir, after);
    if (*batch) return cmdBatch(files, out_dir, jobs);
    if (*validate) return cmdValidate(files);
  } catch (const CliError& e) {
    std::cerr << e.body.dump() << '\n';
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}
