#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  fs::path dir;
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("kimura_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

/// Writes `config` (when non-empty), runs the tool with `args`, returns the exit code.
Run run(const std::string& name, const std::string& args, const std::string& config = "", const std::string& extra = "") {
  const fs::path dir = scratch(name);
  std::string cmd = std::string(KIMURA_CLI_PATH) + " --out " + (dir / "out").string();
  if (!config.empty()) {
    std::ofstream(dir / "config.json") << config;
    cmd += " --config " + (dir / "config.json").string();
  }
  cmd += " " + extra + " " + args + " > " + (dir / "log.txt").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, dir / "out"};
}

std::string first_data_row(const fs::path& csv) {
  std::istringstream s(slurp(csv));
  std::string line;
  std::getline(s, line);
  std::getline(s, line);
  return line;
}

}  // namespace

TEST(Cli, KernelEvalPutsTheAtomFirst) {
  const auto r = run("keval", "kernel eval", R"({"b":0,"t":1,"x":1,"y":[0.5,1]})");
  ASSERT_EQ(r.code, 0);
  const std::string row = first_data_row(r.dir / "kernel.csv");
  EXPECT_NE(row.find(",0,-1,1,0,0.36787944117144233"), std::string::npos) << row;
  const json m = json::parse(slurp(r.dir / "manifest.json"));
  EXPECT_EQ(m["command"], "kernel eval");
  for (const char* k : {"config_hash", "version", "seed", "wall_time_s", "outputs", "truncations"}) EXPECT_TRUE(m.contains(k)) << k;
}

TEST(Cli, ResolventOfConstantIsReciprocal) {
  const auto r = run("resolvent", "solve resolvent", R"({"b":[0.5],"axes":[[0.5,1,2]],"mu":2,"f":{"name":"constant"}})");
  ASSERT_EQ(r.code, 0);
  std::istringstream s(slurp(r.dir / "solution.csv"));
  std::string line;
  std::getline(s, line);
  EXPECT_EQ(line, "x1,value_re,value_im");
  while (std::getline(s, line)) {
    const auto a = line.find(','), b = line.find(',', a + 1);
    EXPECT_NEAR(std::stod(line.substr(a + 1, b - a - 1)), 0.5, 1e-8) << line;
  }
}

TEST(Cli, NeutralWfPreservesLinearData) {
  const auto r = run("wf", "solve wf", R"({"operator":{},"f":{"name":"linear"},"t":0.5,"dt":0.002,"nodes":40})");
  ASSERT_EQ(r.code, 0);
  std::istringstream s(slurp(r.dir / "solution.csv"));
  std::string line;
  std::getline(s, line);
  while (std::getline(s, line)) {
    const auto a = line.find(',');
    EXPECT_NEAR(std::stod(line.substr(a + 1)), std::stod(line.substr(0, a)), 1e-3) << line;
  }
}

TEST(Cli, ClassifySimplexWithoutDrift) {
  const auto r = run("classify", "classify", R"({"kind":"simplex","dimension":2,"operator":{"weights":[0,0,0]}})");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(json::parse(slurp(r.dir / "classification.jsonl"))["terminal_count"], 3);
}

TEST(Cli, FixationIsByteIdenticalForAFixedSeed) {
  const std::string cfg = R"({"x0":0.3,"n":500,"dt":0.001})";
  const auto a = run("fix_a", "sample fixation", cfg, "--seed 7");
  const auto b = run("fix_b", "sample fixation", cfg, "--seed 7 --workers 2");
  ASSERT_EQ(a.code, 0);
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(slurp(a.dir / "estimate.jsonl"), slurp(b.dir / "estimate.jsonl"));
  EXPECT_EQ(json::parse(slurp(a.dir / "manifest.json"))["seed"], 7);
}

TEST(Cli, TransitionSamplesAreDeterministic) {
  const std::string cfg = R"({"b":0.5,"t":1,"x":1,"n":200,"seed":3})";
  const auto a = run("tr_a", "sample transition", cfg), b = run("tr_b", "sample transition", cfg);
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(slurp(a.dir / "samples.csv"), slurp(b.dir / "samples.csv"));
}

TEST(Cli, UnknownConfigKeyIsAUsageErrorWithNoOutput) {
  const auto r = run("unknown_key", "sample transition", R"({"b":0.5,"t":1,"x":1,"n":5,"bogus":1})");
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(fs::exists(r.dir));
}

TEST(Cli, MalformedJsonAndMissingSubcommandAreUsageErrors) {
  EXPECT_EQ(run("bad_json", "kernel eval", "{not json").code, 2);
  EXPECT_EQ(run("no_sub", "").code, 2);
  EXPECT_EQ(run("bad_action", "kernel integrate", R"({})").code, 2);
  EXPECT_EQ(run("bad_suite", "verify --suite everything").code, 2);
}

TEST(Cli, InvalidParameterIsAUsageError) {
  EXPECT_EQ(run("neg_b", "kernel measure", R"({"b":-1,"t":1,"x":[1],"y":[1]})").code, 2);
  EXPECT_EQ(run("sector", "solve resolvent", R"({"b":[0.5],"axes":[[1]],"mu":-1,"f":{"name":"constant"}})").code, 2);
}

TEST(Cli, HolderNormOfConstantHasZeroSeminorm) {
  const auto r = run("holder", "holder norm", R"({"f":{"name":"constant"},"axis":{"lo":0,"hi":4,"n":21},"gamma":0.5})");
  ASSERT_EQ(r.code, 0);
  const json j = json::parse(slurp(r.dir / "holder.jsonl"));
  EXPECT_EQ(j["seminorm"], 0.0);
  EXPECT_EQ(j["norm"], 1.0);
}

TEST(Cli, VerifyIdentitiesPasses) {
  const auto r = run("verify", "verify --suite identities");
  ASSERT_EQ(r.code, 0) << slurp(r.dir.parent_path() / "log.txt");
  EXPECT_TRUE(fs::exists(r.dir / "report.jsonl"));
  EXPECT_TRUE(fs::exists(r.dir / "summary.csv"));
}
