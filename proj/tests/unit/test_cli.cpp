// Copyright 2026 The rnmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Drives the rnmpc executable end to end and checks exit codes and outputs.

#include <rnmpc/json_util.hpp>

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace rnmpc {
namespace {

namespace fs = std::filesystem;

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(RNMPC_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rnmpc_cli_" + name);
  fs::remove_all(p);
  return p;
}

TEST(Cli, SolveOrigin) {
  const auto r = run("solve --model builtin:pannocchia2011 --x0 0,0");
  ASSERT_EQ(r.code, 0);
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["status"], "converged");
  EXPECT_LE(std::abs(j["u_star"][0].get<double>()), 1e-12);
  EXPECT_TRUE(j["A"].empty());
  EXPECT_TRUE(j["regular"].get<bool>());
  EXPECT_TRUE(j["config"].contains("model_hash"));
}

TEST(Cli, SolveSaturated) {
  const auto r = run("solve --x0 3,4");
  ASSERT_EQ(r.code, 0);
  const Json j = Json::parse(r.out);
  EXPECT_DOUBLE_EQ(j["u_star"][0].get<double>(), -1.0);
  const auto A = j["A"].get<std::vector<int>>();
  EXPECT_NE(std::find(A.begin(), A.end(), 1), A.end());
  EXPECT_EQ(j["A_tilde"].get<std::vector<int>>(), std::vector<int>{1});
}

TEST(Cli, SolveInfeasibleAndBadInput) {
  EXPECT_EQ(run("solve --x0 100,100").code, 2);
  EXPECT_EQ(run("solve --x0 1,two").code, 1);
  EXPECT_EQ(run("solve --x0 1,2,3").code, 1);
  EXPECT_EQ(run("solve").code, 1);
  EXPECT_EQ(run("solve --model /nonexistent.json --x0 0,0").code, 1);
  EXPECT_EQ(run("").code, 1);
}

TEST(Cli, ModelFileMatchesBuiltin) {
  const fs::path model = fs::path(RNMPC_SOURCE_DIR) / "data" / "pannocchia2011.json";
  const auto a = Json::parse(run("solve --x0 0.5,-0.3 --model " + model.string()).out);
  const auto b = Json::parse(run("solve --x0 0.5,-0.3").out);
  EXPECT_EQ(a["U_star"], b["U_star"]);
  EXPECT_EQ(a["config"]["model_hash"], b["config"]["model_hash"]);
}

TEST(Cli, PipelineSimulateCoverage) {
  const fs::path dir = scratch("pipeline");
  const std::string common = "--grid 41 --verify-samples 1000 --samples 1000 --seed 3 --max-ellipsoids 1";
  ASSERT_EQ(run("pipeline " + common + " --out " + dir.string()).code, 0);
  for (const char* f : {"atlas.json", "atlas.csv", "store.json", "coverage.json", "summary.txt"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_FALSE(fs::exists(dir / "FAILED"));
  const std::string summary = slurp(dir / "summary.txt");
  EXPECT_NE(summary.find("A~={1} u*=-1"), std::string::npos);
  EXPECT_NE(summary.find("A~={2} u*=1"), std::string::npos);

  const Json store = Json::parse(slurp(dir / "store.json"));
  EXPECT_EQ(store["entries"].size(), 2u);
  EXPECT_EQ(store["metadata"]["config"]["seed"], 3);

  // Same inputs, same bytes.
  const fs::path again = scratch("pipeline_again");
  ASSERT_EQ(run("pipeline " + common + " --out " + again.string()).code, 0);
  for (const char* f : {"atlas.json", "atlas.csv", "store.json", "coverage.json"})
    EXPECT_EQ(slurp(dir / f), slurp(again / f)) << f;

  const fs::path traj = dir / "traj.csv";
  const auto sim = run("simulate --x0 3,4 --steps 30 --store " + (dir / "store.json").string() + " --out " + traj.string());
  ASSERT_EQ(sim.code, 0);
  EXPECT_EQ(Json::parse(sim.out)["steps"], 30);
  EXPECT_TRUE(fs::exists(traj));

  const auto base = run("simulate --x0 0,0 --steps 4 --no-store");
  ASSERT_EQ(base.code, 0);
  EXPECT_EQ(Json::parse(base.out)["ocp_avoided"], 0.0);
  EXPECT_EQ(run("simulate --x0 0,0 --steps 4").code, 1);

  const auto cov = run("coverage --samples 1000 --store " + (dir / "store.json").string() + " --atlas " +
                       (dir / "atlas.json").string());
  ASSERT_EQ(cov.code, 0);
  EXPECT_GT(Json::parse(cov.out)["coverage"].get<double>(), 0.0);

  // A store checked against another model is refused.
  Json other = Json::parse(slurp(fs::path(RNMPC_SOURCE_DIR) / "data" / "pannocchia2011.json"));
  other["alpha"] = 1.0;
  std::ofstream(dir / "other_model.json") << other.dump();
  EXPECT_EQ(run("simulate --x0 3,4 --store " + (dir / "store.json").string() + " --model " +
                (dir / "other_model.json").string()).code,
            4);
}

TEST(Cli, PipelineWithoutFeasibleSamples) {
  const fs::path dir = scratch("empty");
  const auto r = run("pipeline --window 20,30,20,30 --grid 3 --out " + dir.string());
  EXPECT_EQ(r.code, 5);
  EXPECT_TRUE(fs::exists(dir / "FAILED"));
  EXPECT_TRUE(fs::exists(dir / "atlas.json"));
}

}  // namespace
}  // namespace rnmpc
