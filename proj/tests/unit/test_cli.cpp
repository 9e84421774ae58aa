// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#include "graft/cli.hpp"
#include "graft/state_io.hpp"
#include "test_util.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace graft {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code;
  std::string out, err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "graft");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

TEST(Cli, SynthIsDeterministic) {
  const fs::path dir = test::temp_dir("cli_synth");
  ASSERT_EQ(run({"synth", "--seed", "11", "--out", (dir / "a").string(), "--grids", "micro"}).code, 0);
  ASSERT_EQ(run({"synth", "--seed", "11", "--out", (dir / "b").string(), "--grids", "micro"}).code, 0);
  ASSERT_EQ(run({"synth", "--seed", "12", "--out", (dir / "c").string()}).code, 0);
  for (const char* f : {"scene.ply", "model.grft", "gt.json", "init.json", "grids.grft"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
  EXPECT_NE(slurp(dir / "a" / "init.json"), slurp(dir / "c" / "init.json"));
}

TEST(Cli, EvalOfGroundTruthIsPerfect) {
  const fs::path dir = test::temp_dir("cli_eval");
  ASSERT_EQ(run({"synth", "--seed", "2", "--out", dir.string()}).code, 0);
  const CliResult r = run({"eval", "--model", (dir / "model.grft").string(), "--pred", (dir / "gt.json").string(),
                           "--gt", (dir / "gt.json").string(), "--scene", (dir / "scene.ply").string(), "--csv",
                           (dir / "m.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  const auto& h = j["humans"][0];
  EXPECT_EQ(h["f1"].get<double>(), 1.0);
  EXPECT_EQ(h["v2s_mm"].get<double>(), 0.0);
  EXPECT_EQ(h["d2s_deg"].get<double>(), 0.0);
  EXPECT_LT(h["pa_mpjpe_mm"].get<double>(), 1e-6);
  EXPECT_EQ(slurp(dir / "m.csv").rfind("human,tau_m,precision,recall,f1,v2s_mm,d2s_deg,pa_mpjpe_mm\n", 0), 0u);
}

TEST(Cli, RefineWritesStatesAndTrajectory) {
  const fs::path dir = test::temp_dir("cli_refine");
  ASSERT_EQ(run({"synth", "--seed", "4", "--out", dir.string(), "--grids", "micro"}).code, 0);
  ASSERT_EQ(run({"init-weights", "--arch", "micro", "--seed", "1", "--out", (dir / "w.grft").string()}).code, 0);
  const std::vector<std::string> common = {"refine",    "--model", (dir / "model.grft").string(),
                                           "--scene",   (dir / "scene.ply").string(),
                                           "--init",    (dir / "init.json").string(),
                                           "--weights", (dir / "w.grft").string(),
                                           "--grids",   (dir / "grids.grft").string()};
  auto args = common;
  args.insert(args.end(), {"--out", (dir / "r1").string(), "--gt", (dir / "gt.json").string()});
  CliResult r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  // A fresh network predicts the no-op update.
  EXPECT_TRUE(load_state_document(dir / "r1" / "refined.json").humans[0] ==
              load_state_document(dir / "init.json").humans[0]);
  std::istringstream csv(slurp(dir / "r1" / "trajectory.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "human,step,mean_probe_dist_mm,scale,f1_vs_gt,wall_ms");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 4);  // initial state plus three steps

  args = common;
  args.insert(args.end(), {"--out", (dir / "r2").string(), "--iters", "0"});
  ASSERT_EQ(run(args).code, 0);
  EXPECT_EQ(slurp(dir / "r2" / "trajectory.csv").substr(0, 48), "human,step,mean_probe_dist_mm,scale,wall_ms\n0,0,");
  EXPECT_EQ(slurp(dir / "r2" / "refined.json"), slurp(dir / "init.json"));
}

TEST(Cli, EvalPairsEachStateWithItsScene) {
  const fs::path dir = test::temp_dir("cli_pairing");
  ASSERT_EQ(run({"synth", "--seed", "3", "--out", (dir / "a").string()}).code, 0);
  ASSERT_EQ(run({"synth", "--seed", "3", "--out", (dir / "b").string(), "--no-wall"}).code, 0);
  const std::vector<std::string> base = {"eval",  "--model", (dir / "a" / "model.grft").string(),
                                         "--pred", (dir / "a" / "gt.json").string(),
                                         "--gt",   (dir / "a" / "gt.json").string(),
                                         "--scene", (dir / "a" / "scene.ply").string(),
                                         "--gt-scene", (dir / "b" / "scene.ply").string()};
  const CliResult paired = run(base);
  auto shared_args = base;
  shared_args.push_back("--shared-scene");
  const CliResult shared = run(shared_args);
  ASSERT_EQ(paired.code, 0) << paired.err;
  ASSERT_EQ(shared.code, 0) << shared.err;
  // The wall is far from the feet, so contact labels agree; V2S is zero only
  // when both states see the same scene.
  EXPECT_EQ(nlohmann::json::parse(shared.out)["humans"][0]["v2s_mm"].get<double>(), 0.0);
  EXPECT_EQ(nlohmann::json::parse(paired.out)["humans"][0]["f1"].get<double>(), 1.0);
}

TEST(Cli, InitWeightsIsDeterministic) {
  const fs::path dir = test::temp_dir("cli_weights");
  ASSERT_EQ(run({"init-weights", "--arch", "micro", "--seed", "9", "--out", (dir / "a.grft").string()}).code, 0);
  ASSERT_EQ(run({"init-weights", "--arch", "micro", "--seed", "9", "--out", (dir / "b.grft").string()}).code, 0);
  EXPECT_EQ(slurp(dir / "a.grft"), slurp(dir / "b.grft"));
}

TEST(Cli, UsageAndRuntimeErrors) {
  CliResult r = run({"synth"});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(nlohmann::json::parse(r.err)["error"], "UsageError");
  EXPECT_EQ(run({"nonsense"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);

  const fs::path dir = test::temp_dir("cli_errors");
  r = run({"eval", "--model", (dir / "missing.grft").string(), "--pred", "x", "--gt", "y", "--scene", "z"});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(nlohmann::json::parse(r.err)["error"], "IoError");
}

}  // namespace
}  // namespace graft
