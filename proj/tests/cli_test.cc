// Copyright 2026 The pacvi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "cli_config.h"
#include "pacvi/dataset.h"
#include "pacvi/errors.h"
#include "pacvi/serialization.h"
#include "pacvi/trainer.h"

#ifndef PACVI_CLI_PATH
#error "PACVI_CLI_PATH must point at the pacvi binary"
#endif

namespace pacvi {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("pacvi_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Runs the CLI inside the test directory and returns its exit code.
  int run(const std::string& args) {
    const std::string cmd = "cd '" + dir_.string() + "' && '" PACVI_CLI_PATH "' " +
                            args + " > out.txt 2> err.txt";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const std::string& name) { return read_text_file(dir_ / name); }
  fs::path path(const std::string& name) const { return dir_ / name; }

  fs::path dir_;
};

TEST_F(CliTest, GenDemosRowCounts) {
  ASSERT_EQ(run("gen-demos --env pendulum --episodes 10 --seed 7 --out demos.csv"), 0);
  EXPECT_EQ(read_dataset_csv(path("demos.csv")).size(), 2000u);
  ASSERT_EQ(run("gen-demos --env racer --episodes 1 --out one.csv"), 0);
  EXPECT_EQ(read_dataset_csv(path("one.csv")).size(), 200u);
  EXPECT_TRUE(fs::exists(path("one.jsonl")));
}

TEST_F(CliTest, GenDemosIsByteStable) {
  ASSERT_EQ(run("gen-demos --env racer --episodes 3 --seed 2 --out a.csv"), 0);
  const std::string first = read("a.csv");
  const std::string traj = read("a.jsonl");
  ASSERT_EQ(run("gen-demos --env racer --episodes 3 --seed 2 --out a.csv"), 0);
  EXPECT_EQ(read("a.csv"), first);
  EXPECT_EQ(read("a.jsonl"), traj);
  EXPECT_EQ(first.rfind("# pacvi-config {", 0), 0u);
}

TEST_F(CliTest, TrainZeroEpochsWritesInitialization) {
  ASSERT_EQ(run("gen-demos --episodes 2 --out d.csv"), 0);
  ASSERT_EQ(run("train --data d.csv --out ck.json --epochs 0 --hidden 6,3 --seed 5"), 0);
  const Checkpoint c = load_checkpoint(path("ck.json"));
  NetworkArch arch;
  arch.input_dim = 2;
  arch.hidden = {6, 3};
  const auto init = VariationalParams::initialize(arch, 5);
  EXPECT_EQ(c.params.mu, init.mu);
  EXPECT_EQ(c.params.rho, init.rho);
  EXPECT_EQ(c.hyperparams.seed, 5u);
  EXPECT_EQ(c.config["command"], "train");
}

TEST_F(CliTest, TrainDefaultsMaterialized) {
  ASSERT_EQ(run("gen-demos --episodes 2 --out d.csv"), 0);
  ASSERT_EQ(run("train --data d.csv --out ck.json --epochs 0"), 0);
  const Json cfg = load_checkpoint(path("ck.json")).config;
  EXPECT_EQ(cfg["arch"]["hidden"], Json::array({90, 30, 10}));
  EXPECT_EQ(cfg["hyperparams"]["learning_rate"], 1e-3);
  EXPECT_EQ(cfg["hyperparams"]["batches"], 20);
  EXPECT_EQ(cfg["hyperparams"]["epochs"], 0);
  EXPECT_EQ(cfg["hyperparams"]["beta"], 100.0);
  EXPECT_EQ(cfg["hyperparams"]["delta"], 0.1);
  EXPECT_EQ(cfg["flags"]["epochs"], "0");
}

TEST_F(CliTest, TrainIsDeterministicAndReplayable) {
  ASSERT_EQ(run("gen-demos --episodes 2 --out d.csv"), 0);
  const std::string args = "train --data d.csv --out ck.json --epochs 2 --hidden 5 --seed 3";
  ASSERT_EQ(run(args), 0);
  const std::string ck = read("ck.json");
  const std::string trace = read("ck.trace.csv");
  ASSERT_EQ(run(args), 0);
  EXPECT_EQ(read("ck.json"), ck);
  EXPECT_EQ(read("ck.trace.csv"), trace);
  EXPECT_EQ(trace_from_csv(trace).records.size(), 40u);
  fs::copy_file(path("ck.json"), path("saved.json"));
  ASSERT_EQ(run("train --config saved.json"), 0);
  EXPECT_EQ(read("ck.json"), ck);
}

TEST_F(CliTest, ConfigFileFlagsYieldToCommandLine) {
  ASSERT_EQ(run("gen-demos --episodes 2 --out d.csv"), 0);
  write_text_file(path("run.cfg"), "# comment\nepochs = 3\nhidden=4\nseed=9\n");
  ASSERT_EQ(run("train --config run.cfg --data d.csv --out ck.json --epochs 1"), 0);
  const Checkpoint c = load_checkpoint(path("ck.json"));
  EXPECT_EQ(c.hyperparams.epochs, 1u);
  EXPECT_EQ(c.hyperparams.seed, 9u);
  EXPECT_EQ(c.params.arch.hidden, std::vector<std::size_t>{4});
  write_text_file(path("bad.cfg"), "epochs\n");
  EXPECT_EQ(run("train --config bad.cfg --data d.csv --out ck.json"), 2);
  write_text_file(path("unknown.cfg"), "colour=red\n");
  EXPECT_EQ(run("train --config unknown.cfg --data d.csv --out ck.json"), 2);
}

TEST_F(CliTest, BoundRecomposesAndIsStable) {
  ASSERT_EQ(run("gen-demos --episodes 2 --out d.csv"), 0);
  ASSERT_EQ(run("gen-demos --episodes 1 --seed 1 --out v.csv"), 0);
  ASSERT_EQ(run("train --data d.csv --out ck.json --epochs 1 --hidden 5"), 0);
  const std::string args = "bound --data d.csv --checkpoint ck.json --mc-samples 1 --seed 0";
  ASSERT_EQ(run(args + " --out b1.json"), 0);
  const std::string first = read("b1.json");
  ASSERT_EQ(run(args + " --out b1.json"), 0);
  EXPECT_EQ(read("b1.json"), first);
  ASSERT_EQ(run(args), 0);
  EXPECT_EQ(Json::parse(read("out.txt"))["report"], Json::parse(first)["report"]);
  const Json r = Json::parse(read("b1.json"))["report"];
  const double sum = r["mc_term"].get<double>() + r["confidence_term"].get<double>() +
                     r["slack_term"].get<double>();
  EXPECT_EQ(r["bound_value"].get<double>(), sum);
  EXPECT_EQ(r["slack_term"], 50.0);

  ASSERT_EQ(run("bound --data d.csv --checkpoint ck.json --delta 0.5 --out b3.json"), 0);
  const Json r3 = Json::parse(read("b3.json"))["report"];
  EXPECT_NEAR(r3["confidence_term"].get<double>(), std::log(2.0) / 400.0, 1e-15);
  EXPECT_EQ(r3["mc_samples"], 30);

  ASSERT_EQ(run("bound --data d.csv --checkpoint ck.json --holdout v.csv --out b4.json"), 0);
  const Json r4 = Json::parse(read("b4.json"))["report"];
  EXPECT_TRUE(r4["holdout_nll"].is_number());
  EXPECT_TRUE(r4["holds"].is_boolean());
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("experiment frobnicate"), 2);
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run("gen-demos --env cartpole --out x.csv"), 2);
  EXPECT_EQ(run("gen-demos --out /nonexistent/dir/x.csv"), 2);
  EXPECT_EQ(run("train --data missing.csv --out ck.json"), 2);
  write_text_file(path("bad.csv"), "x_0,x_1,a_0\n1,2,3\n4,oops,6\n");
  EXPECT_EQ(run("train --data bad.csv --out ck.json"), 2);
  const std::string err = read("err.txt");
  EXPECT_NE(err.find("line 3"), std::string::npos) << err;
  EXPECT_NE(err.find("x_1"), std::string::npos) << err;
}

TEST_F(CliTest, SmallBetaWithoutClippingNeverCrashes) {
  ASSERT_EQ(run("gen-demos --episodes 2 --out d.csv"), 0);
  const int rc = run("train --data d.csv --out ck.json --beta 0.01 --clip-off --epochs 5 --hidden 8");
  EXPECT_TRUE(rc == 0 || rc == 3) << rc;
  EXPECT_TRUE(fs::exists(path("ck.json")));
}

TEST_F(CliTest, CorrelateOnTrace) {
  ASSERT_EQ(run("gen-demos --episodes 2 --out d.csv"), 0);
  ASSERT_EQ(run("train --data d.csv --out ck.json --epochs 10 --hidden 5"), 0);
  ASSERT_EQ(run("experiment correlate --trace ck.trace.csv --out c.json"), 0);
  const Json j = Json::parse(read("c.json"));
  EXPECT_EQ(j["points"], 200);
  EXPECT_GE(j["r"].get<double>(), 0.999999);
  EXPECT_LE(j["p_value"].get<double>(), 0.002);
  EXPECT_NE(read("out.txt").find(" r "), std::string::npos);
}

TEST_F(CliTest, ExperimentReportsEmbedConfig) {
  ASSERT_EQ(run("experiment generalize --env racer --seeds 0,1 --epochs 2 --hidden 4 "
                "--episodes 2 --out g.json"), 0);
  const Json j = Json::parse(read("g.json"));
  EXPECT_EQ(j["config"]["variant"]["mass"], 1.6);
  EXPECT_EQ(j["config"]["seeds"], Json::array({0, 1}));
  EXPECT_NE(read("out.txt").find("racer"), std::string::npos);
  const std::string first = read("g.json");
  ASSERT_EQ(run("experiment generalize --config g.json"), 0);
  EXPECT_EQ(read("g.json"), first);
}

TEST(CliConfig, ParsesKeyValueText) {
  const auto e = cli::parse_config_text("a=1\n  --b = two words \n\n# x\nc=\"q\"\n");
  ASSERT_EQ(e.size(), 3u);
  EXPECT_EQ(e[0], (std::pair<std::string, std::string>{"a", "1"}));
  EXPECT_EQ(e[1], (std::pair<std::string, std::string>{"b", "two words"}));
  EXPECT_EQ(e[2].second, "q");
  EXPECT_THROW(cli::parse_config_text("novalue\n"), InputError);
  EXPECT_THROW(cli::parse_config_text("=3\n"), InputError);
}

TEST(CliConfig, ReadsEmbeddedFlags) {
  const auto e = cli::config_entries_from_text(
      "# pacvi-config {\"config_free\":1,\"flags\":{\"epochs\":\"4\"}}\nx_0\n");
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(e[0].second, "4");
  const auto j = cli::config_entries_from_text("{\"config\":{\"flags\":{\"seed\":\"2\"}}}\n");
  EXPECT_EQ(j[0].first, "seed");
  EXPECT_THROW(cli::config_entries_from_text("{\"a\":1}"), InputError);
}

}  // namespace
}  // namespace pacvi
