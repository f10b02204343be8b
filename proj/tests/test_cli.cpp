#include <gtest/gtest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kSim = ISMPC_SIM_PATH;
const fs::path kConfigs = ISMPC_CONFIG_DIR;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ismpc_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct Result {
  int code;
  std::string err;
};

Result run(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = "ISMPC_VERBOSITY=0 " + kSim + " " + args + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  std::ifstream in(err);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

json readJson(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, RunWritesArtifacts) {
  const fs::path dir = scratch("run");
  const Result r = run("run " + (kConfigs / "fig3_known_disturbance.json").string() + " -o " +
                           (dir / "out").string() + " --qp-dump 5",
                       dir);
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"trace.csv", "summary.json", "diagnostics.jsonl", "gait.svg", "disturbance.svg",
                        "divergence.svg", "qp_dump.txt"})
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  EXPECT_EQ(readJson(dir / "out" / "summary.json")["termination"], "completed");
  EXPECT_EQ(slurp(dir / "out" / "qp_dump.txt").rfind("qp 200 2 400", 0), 0u);
}

TEST(Cli, PlotsAreByteIdenticalAcrossRuns) {
  const fs::path dir = scratch("determinism");
  const std::string cfg = (kConfigs / "fig2_balance_known.json").string();
  ASSERT_EQ(run("run " + cfg + " -o " + (dir / "a").string(), dir).code, 0);
  ASSERT_EQ(run("run " + cfg + " -o " + (dir / "b").string(), dir).code, 0);
  for (const char* f : {"gait.svg", "disturbance.svg", "divergence.svg", "trace.csv", "summary.json"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
}

TEST(Cli, InfeasibleRunIsRecordedWithExitZero) {
  const fs::path dir = scratch("infeasible");
  const Result r = run("run " + (kConfigs / "fig7_no_restriction.json").string() + " -o " + (dir / "out").string() +
                           " --no-plots",
                       dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string term = readJson(dir / "out" / "summary.json")["termination"];
  EXPECT_EQ(term.rfind("infeasible_at(", 0), 0u) << term;
}

TEST(Cli, EmptyFootstepListIsAConfigError) {
  const fs::path dir = scratch("empty");
  std::ofstream(dir / "bad.json") << R"({"name": "bad", "footsteps": {"steps": []}})";
  const Result r = run("run " + (dir / "bad.json").string() + " -o " + (dir / "out").string(), dir);
  EXPECT_EQ(r.code, 2);
  const json err = json::parse(r.err);
  EXPECT_EQ(err["error"], "config");
  EXPECT_FALSE(fs::exists(dir / "out" / "trace.csv"));
}

TEST(Cli, UnknownKeyAndMissingFileAreConfigErrors) {
  const fs::path dir = scratch("unknown");
  std::ofstream(dir / "bad.json") << R"({"mpc": {"horizn": 10}})";
  Result r = run("validate " + (dir / "bad.json").string(), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(json::parse(r.err)["path"], "mpc.horizn");
  r = run("validate " + (dir / "missing.json").string(), dir);
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, UsageErrorExitCode) {
  const fs::path dir = scratch("usage");
  EXPECT_EQ(run("frobnicate", dir).code, 2);
  EXPECT_EQ(run("run", dir).code, 2);
}

TEST(Cli, UnwritableOutputIsInternalError) {
  const fs::path dir = scratch("unwritable");
  std::ofstream(dir / "file") << "x";
  const Result r = run("run " + (kConfigs / "fig2_balance_known.json").string() + " -o " +
                           (dir / "file" / "sub").string(),
                       dir);
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(json::parse(r.err)["error"], "internal");
}

TEST(Cli, CompareIdenticalConfigsGivesZero) {
  const fs::path dir = scratch("compare_same");
  const std::string cfg = (kConfigs / "fig2_balance_known.json").string();
  ASSERT_EQ(run("compare " + cfg + " " + cfg + " -o " + (dir / "out").string(), dir).code, 0);
  const json j = readJson(dir / "out" / "compare.json");
  EXPECT_EQ(j["max_com_difference"], 0.0);
  EXPECT_EQ(j["rms_com_difference"], 0.0);
  EXPECT_TRUE(fs::exists(dir / "out" / "overlay.svg"));
}

TEST(Cli, CompareNominalAgainstObserver) {
  const fs::path dir = scratch("compare_nominal");
  ASSERT_EQ(run("compare " + (kConfigs / "fig3_nominal.json").string() + " " +
                    (kConfigs / "fig4_observer_constant.json").string() + " -o " + (dir / "out").string(),
                dir)
                .code,
            0);
  const json j = readJson(dir / "out" / "compare.json");
  EXPECT_GT(j["max_com_difference"].get<double>(), 0.0);
  EXPECT_EQ(j["b"]["termination"], "completed");
  EXPECT_NE(j["a"]["termination"], "completed");
}

TEST(Cli, CompareKnownAgainstObserved) {
  const fs::path dir = scratch("compare_known");
  ASSERT_EQ(run("compare " + (kConfigs / "fig3_known_disturbance.json").string() + " " +
                    (kConfigs / "fig4_observer_constant.json").string() + " -o " + (dir / "out").string(),
                dir)
                .code,
            0);
  EXPECT_LT(readJson(dir / "out" / "compare.json")["max_com_difference_after"].get<double>(), 0.005);
}

TEST(Cli, BatchAndValidateBundledConfigs) {
  const fs::path dir = scratch("batch");
  std::string all;
  for (const char* f : {"fig2_balance_known.json", "fig3_nominal.json"}) all += " " + (kConfigs / f).string();
  ASSERT_EQ(run("batch" + all + " -o " + (dir / "out").string() + " -j 2", dir).code, 0);
  const json j = readJson(dir / "out" / "batch.json");
  ASSERT_EQ(j.size(), 2u);
  EXPECT_EQ(j[0]["termination"], "completed");
  EXPECT_TRUE(fs::exists(dir / "out" / "fig3_nominal" / "trace.csv"));

  std::string every;
  for (const auto& e : fs::directory_iterator(kConfigs)) every += " " + e.path().string();
  EXPECT_EQ(run("validate" + every, dir).code, 0);
}
