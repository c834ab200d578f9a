// Copyright 2026 The critiquerec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>

#include <cstdlib>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "critiquerec/experiment.hpp"
#include "critiquerec/synthetic.hpp"
#include "fixtures.hpp"
#include "json.hpp"

namespace critiquerec {
namespace {

class ExperimentTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir("experiment");
    SyntheticConfig sc;
    sc.users_per_cluster = 60;
    sc.items_per_user = 24;
    sc.items_per_genre = 40;
    SaveDataset(MakeClusterDataset(sc), *dir_ / "synth.jsonl");
    std::ostringstream out, err;
    auto cfg = Base("shared");
    ASSERT_EQ(CmdTrainCritic(cfg, {}, out, err), 0) << err.str();
    ASSERT_EQ(CmdBuildOracle(cfg, out, err), 0) << err.str();
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }

  static ExperimentConfig Base(std::string const& run) {
    ExperimentConfig cfg;
    cfg.dataset = (*dir_ / "synth.jsonl").string();
    cfg.schema = "books";
    cfg.users = 120;
    cfg.oracle_users = 120;
    cfg.history_size = 10;
    cfg.critic.epochs = 4;
    cfg.critic.hidden = 16;
    cfg.targets_per_user = 0;
    cfg.embedder.dim = 64;
    cfg.out = (*dir_ / run).string();
    cfg.critic_model = (*dir_ / "shared" / "critic.bin").string();
    cfg.oracle_model = (*dir_ / "shared" / "oracle.bin").string();
    cfg.loops = 1;
    return cfg;
  }

  static std::string Read(ExperimentConfig const& cfg, std::string const& name) {
    return testing::ReadText(cfg.OutPath(name));
  }

  static testing::TempDir* dir_;
};

testing::TempDir* ExperimentTest::dir_ = nullptr;

TEST_F(ExperimentTest, IngestCheckReportsCounts) {
  std::ostringstream out, err;
  EXPECT_EQ(CmdIngestCheck(Base("ingest"), out, err), 0) << err.str();
  EXPECT_NE(out.str().find("dataset:"), std::string::npos);
  auto missing = Base("ingest");
  missing.dataset = (*dir_ / "absent.jsonl").string();
  EXPECT_EQ(CmdIngestCheck(missing, out, err), 2);
}

TEST_F(ExperimentTest, TrainingWritesModelAndLog) {
  EXPECT_TRUE(std::filesystem::exists(*dir_ / "shared" / "critic.bin"));
  EXPECT_TRUE(std::filesystem::exists(*dir_ / "shared" / "oracle.bin"));
  auto oracle = LoadModel(*dir_ / "shared" / "oracle.bin");
  EXPECT_EQ(oracle.tag(), "oracle");
}

TEST_F(ExperimentTest, SweepWritesOneModelPerSize) {
  auto cfg = Base("sweep");
  cfg.critic_model = "critic.bin";
  cfg.critic.epochs = 2;
  std::ostringstream out, err;
  ASSERT_EQ(CmdTrainCritic(cfg, {40, 80}, out, err), 0) << err.str();
  EXPECT_TRUE(std::filesystem::exists(cfg.OutPath("critic-u40.bin")));
  EXPECT_TRUE(std::filesystem::exists(cfg.OutPath("critic-u80.bin")));
  EXPECT_NE(out.str().find("shared validation split"), std::string::npos);
}

TEST_F(ExperimentTest, MissingModelIsAFailure) {
  auto cfg = Base("nomodel");
  cfg.critic_model = "critic.bin";
  std::ostringstream out, err;
  EXPECT_EQ(CmdRunExperiment(cfg, out, err), 1);
  EXPECT_NE(err.str().find("train-critic"), std::string::npos) << err.str();
}

TEST_F(ExperimentTest, ThreeLoopsReplayAndReport) {
  auto cfg = Base("three");
  cfg.loops = 3;
  std::ostringstream out, err;
  ASSERT_EQ(CmdRunExperiment(cfg, out, err), 0) << err.str();
  for (auto name : {"traces.jsonl", "transcripts.jsonl", "config.resolved.toml", "report.json",
                    "report.txt", "report.csv", "manifest.json"}) {
    EXPECT_TRUE(std::filesystem::exists(cfg.OutPath(name))) << name;
  }
  auto const report = ReportFromJson(Read(cfg, "report.json"));
  ASSERT_EQ(report.loops.size(), 4u);
  EXPECT_GT(report.loops[0].users, 0u);
  ASSERT_TRUE(report.critic.has_value());
  auto const csv = Read(cfg, "report.csv");
  for (int n : {3, 5, 10}) {
    std::size_t rows = 0;
    for (int loop = 0; loop < 4; ++loop) {
      std::string const prefix = "\noracle," + std::to_string(loop) + "," + std::to_string(n) + ",";
      rows += csv.find(prefix) != std::string::npos ? 1 : 0;
    }
    EXPECT_EQ(rows, 4u) << "N=" << n;
  }
  auto const manifest = nlohmann::json::parse(Read(cfg, "manifest.json"));
  EXPECT_EQ(manifest["command"], "run-experiment");
  EXPECT_EQ(manifest["config_digest"], ConfigDigest(cfg));
  EXPECT_EQ(manifest["version"], kVersion);

  ExperimentConfig resolved;
  ApplyConfig(ConfigDocument::Load(cfg.OutPath("config.resolved.toml")), resolved);
  EXPECT_EQ(ConfigDigest(resolved), ConfigDigest(cfg));

  std::ostringstream rout, rerr;
  ASSERT_EQ(CmdReplay(cfg, cfg.OutPath("traces.jsonl"), cfg.OutPath("replay"), rout, rerr), 0)
      << rerr.str();
  EXPECT_EQ(Read(cfg, "replay/report.json"), Read(cfg, "report.json"));
  EXPECT_EQ(Read(cfg, "replay/report.csv"), Read(cfg, "report.csv"));

  auto other_ns = cfg;
  other_ns.ns = {1, 2};
  ASSERT_EQ(CmdReplay(other_ns, cfg.OutPath("traces.jsonl"), cfg.OutPath("replay-ns"), rout, rerr), 0);
  auto const ns_report = ReportFromJson(Read(cfg, "replay-ns/report.json"));
  EXPECT_EQ(ns_report.ns, (std::vector<int>{1, 2}));
  EXPECT_NE(ns_report.At(3, 2), nullptr);

  std::ostringstream one, both, e2;
  EXPECT_EQ(CmdReport({cfg.OutPath("")}, one, e2), 0) << e2.str();
  EXPECT_NE(one.str().find("NDCG"), std::string::npos);
  EXPECT_EQ(CmdReport({cfg.OutPath(""), cfg.OutPath("replay")}, both, e2), 0) << e2.str();
  EXPECT_NE(both.str().find("replay"), std::string::npos);
  EXPECT_EQ(CmdReport({*dir_ / "no-such-run"}, both, e2), 1);
}

TEST_F(ExperimentTest, WorkersDoNotChangeResults) {
  auto one = Base("w1");
  auto three = Base("w3");
  three.workers = 3;
  std::ostringstream out, err;
  ASSERT_EQ(CmdRunExperiment(one, out, err), 0) << err.str();
  ASSERT_EQ(CmdRunExperiment(three, out, err), 0) << err.str();
  EXPECT_EQ(Read(one, "report.json"), Read(three, "report.json"));
  EXPECT_EQ(Read(one, "traces.jsonl"), Read(three, "traces.jsonl"));
}

TEST_F(ExperimentTest, TruncatedTraceFileFailsWithLineNumber) {
  auto cfg = Base("truncated");
  std::ostringstream out, err;
  ASSERT_EQ(CmdRunExperiment(cfg, out, err), 0) << err.str();
  auto text = Read(cfg, "traces.jsonl");
  auto const first_end = text.find('\n');
  testing::WriteText(cfg.OutPath("cut.jsonl"), text.substr(0, first_end + 1 + (first_end / 2)));
  std::ostringstream rout, rerr;
  EXPECT_EQ(CmdReplay(cfg, cfg.OutPath("cut.jsonl"), cfg.OutPath("cut"), rout, rerr), 1);
  EXPECT_NE(rerr.str().find("cut.jsonl:2:"), std::string::npos) << rerr.str();
  EXPECT_EQ(CmdReplay(cfg, cfg.OutPath("absent.jsonl"), cfg.OutPath("cut"), rout, rerr), 2);
}

TEST_F(ExperimentTest, EmptyTracesGiveEmptyReport) {
  auto cfg = Base("empty");
  std::filesystem::create_directories(cfg.out);
  testing::WriteText(cfg.OutPath("traces.jsonl"), "");
  std::ostringstream out, err;
  EXPECT_EQ(CmdReplay(cfg, cfg.OutPath("traces.jsonl"), cfg.OutPath("replay"), out, err), 0)
      << err.str();
  EXPECT_NE(out.str().find("no successful users; report is empty"), std::string::npos);
  std::ostringstream rout;
  EXPECT_EQ(CmdReport({cfg.OutPath("replay")}, rout, err), 0);
  EXPECT_NE(rout.str().find("report is empty"), std::string::npos);
}

TEST_F(ExperimentTest, CandidateModeReportsUnresolvedFraction) {
  auto cfg = Base("candidate");
  cfg.mode = EvalMode::kCandidateSet;
  cfg.candidate_size = 12;
  std::ostringstream out, err;
  ASSERT_EQ(CmdRunExperiment(cfg, out, err), 0) << err.str();
  auto const report = ReportFromJson(Read(cfg, "report.json"));
  EXPECT_EQ(report.mode, EvalMode::kCandidateSet);
  ASSERT_FALSE(report.loops.empty());
  EXPECT_EQ(report.loops[0].unresolved, 0u);
  auto const manifest = nlohmann::json::parse(Read(cfg, "manifest.json"));
  EXPECT_TRUE(manifest["artifacts"]["oracle_model"].is_null());
}

#ifdef CRITIQUEREC_CLI_PATH
int RunCli(std::string const& args) {
  std::string const cli = CRITIQUEREC_CLI_PATH;
  int const status = std::system((cli + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  if (std::string(CRITIQUEREC_CLI_PATH).empty()) GTEST_SKIP() << "CLI not built";
  EXPECT_EQ(RunCli("--version"), 0);
  EXPECT_EQ(RunCli("no-such-command"), 2);
  EXPECT_EQ(RunCli("ingest-check --dataset /nonexistent/data.jsonl"), 2);
  EXPECT_EQ(RunCli("run-experiment --set loop.bogus=1 --dataset x.jsonl"), 2);
}
#endif

}  // namespace
}  // namespace critiquerec
