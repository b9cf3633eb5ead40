#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include <sys/wait.h>

#include "skipshift/config.hpp"
#include "skipshift/fs_util.hpp"
#include "skipshift/pipeline.hpp"
#include "skipshift/run_record.hpp"
#include "skipshift/verify.hpp"
#include "support.hpp"

namespace skipshift {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

// Smallest configuration that exercises every stage.
nlohmann::json tiny_config_json(const fs::path& out) {
  return {{"output_dir", out.string()},
          {"dataset", {{"count", 20}, {"master_seed", 3}, {"generator", {{"image_size", 64}}}}},
          {"model", {{"encoder_depths", {18}}, {"prune_levels", {0}}}},
          {"training", {{"epochs", 1}, {"folds", 2}, {"batch_size", 4}, {"crop_size", 64}}},
          {"sweep", {{"brightness", {0.5}}, {"contrast", nlohmann::json::array()}, {"saturation", nlohmann::json::array()}}},
          {"probe", {{"taps", {"encoder_0", "encoder_4"}}, {"bins", 10}}}};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SKIPSHIFT_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Environment, ExpandsVariablesAndDefaults) {
  ::setenv("SKIPSHIFT_TEST_ROOT", "/data/x", 1);
  ::unsetenv("SKIPSHIFT_TEST_UNSET");
  const nlohmann::json in = {{"a", "${SKIPSHIFT_TEST_ROOT}/out"},
                             {"b", {"${SKIPSHIFT_TEST_UNSET:-fallback}", 3}},
                             {"c", {{"d", "plain"}}}};
  const auto out = expand_environment(in);
  EXPECT_EQ(out["a"], "/data/x/out");
  EXPECT_EQ(out["b"][0], "fallback");
  EXPECT_EQ(out["b"][1], 3);
  EXPECT_EQ(out["c"]["d"], "plain");
  EXPECT_THROW(expand_environment(nlohmann::json("${SKIPSHIFT_TEST_UNSET}")), ConfigError);
}

TEST(Config, LoadsCommentedJsonAndResolvesRelativePaths) {
  TempDir dir("cfg");
  std::ofstream(dir.path() / "exp.json") << R"({
    // comments are allowed
    "output_dir": "out",
    "dataset": {"source_image": "frames/source.png", "count": 50},
    "model": {"encoder_depths": [18], "prune_levels": [0, 1]}
  })";
  ::unsetenv("SKIPSHIFT_OUTPUT_DIR");
  const auto cfg = load_config(dir.path() / "exp.json");
  EXPECT_EQ(fs::path(cfg.dataset.source_image), dir.path() / "frames/source.png");
  EXPECT_EQ(cfg.dataset.count, 50);
  EXPECT_EQ(cfg.model.specs().size(), 2u);
  ::setenv("SKIPSHIFT_OUTPUT_DIR", "/tmp/elsewhere", 1);
  EXPECT_EQ(load_config(dir.path() / "exp.json").output_dir, "/tmp/elsewhere");
  ::unsetenv("SKIPSHIFT_OUTPUT_DIR");
  EXPECT_EQ(ExperimentConfig::from_json(cfg.to_json()).to_json(), cfg.to_json());
}

TEST(Config, InvalidSettingsAreConfigErrors) {
  TempDir dir("cfgbad");
  auto bad = [&](const nlohmann::json& j) { return ExperimentConfig::from_json(j); };
  EXPECT_THROW(bad({{"training", {{"epochs", 0}}}}), ConfigError);
  EXPECT_THROW(bad({{"probe", {{"taps", {"encoder_9"}}}}}), ConfigError);
  EXPECT_THROW(bad({{"probe", {{"shifts", {{{"kind", "hue"}, {"factor", 1.0}}}}}}}), ConfigError);
  EXPECT_THROW(bad({{"dataset", {{"generator", {{"image_size", 100}}}}}}), ConfigError);
  EXPECT_THROW(bad({{"sweep", {{"saturation", {1.5}}}}}), ConfigError);
  EXPECT_THROW(bad({{"workers", 0}}), ConfigError);
  std::ofstream(dir.path() / "broken.json") << "{ not json";
  EXPECT_THROW(load_config(dir.path() / "broken.json"), ConfigError);
  EXPECT_THROW(load_config(dir.path() / "absent.json"), ConfigError);
}

TEST(Config, PresetsDescribeTheTwoScales) {
  const auto desk = desk_preset();
  EXPECT_EQ(desk.dataset.count, 200);
  EXPECT_EQ(desk.dataset.generator.image_size, 256);
  EXPECT_EQ(desk.model.specs().size(), 2u);
  EXPECT_EQ(desk.training.folds, 2);
  EXPECT_EQ(desk.training.epochs, 15);
  const auto paper = paper_preset();
  EXPECT_EQ(paper.dataset.count, 1000);
  EXPECT_EQ(paper.dataset.generator.image_size, 512);
  EXPECT_EQ(paper.model.specs().size(), 10u);
  EXPECT_EQ(paper.training.folds, 5);
  EXPECT_EQ(paper.training.epochs, 50);
  EXPECT_NO_THROW(desk.validate());
  EXPECT_NO_THROW(paper.validate());
}

TEST(RunRecordTest, LatestEventDefinesStageState) {
  TempDir dir("record");
  write_text_atomic(dir.path() / "a.txt", "x");
  {
    RunRecord r(dir.path());
    r.append({"generate", "completed", "k1", utc_timestamp(), {"a.txt"}, ""});
    r.append({"train", "partial", "k2", utc_timestamp(), {}, "1 job failed"});
  }
  RunRecord r = RunRecord::open(dir.path());
  ASSERT_EQ(r.history().size(), 2u);
  EXPECT_TRUE(r.completed("generate", "k1"));
  EXPECT_FALSE(r.completed("generate", "k0"));
  EXPECT_FALSE(r.completed("train", "k2"));
  EXPECT_EQ(r.artifacts(), std::vector<std::string>{"a.txt"});
  fs::remove(dir.path() / "a.txt");
  EXPECT_FALSE(r.completed("generate", "k1"));
  EXPECT_EQ(r.to_json()["software_version"], kSoftwareVersion);
}

TEST(PipelineTest, StagesRunOnceThenHitTheCache) {
  TempDir dir("pipe");
  const auto cfg = ExperimentConfig::from_json(tiny_config_json(dir.path() / "out"));
  {
    Pipeline p(cfg);
    ASSERT_TRUE(p.run());
    EXPECT_TRUE(fs::exists(p.results_dir() / "iou_matrix.csv"));
    EXPECT_TRUE(fs::exists(p.dataset_dir() / "manifest.json"));
    EXPECT_EQ(p.probe_reports("resnet18_L0", cfg.probe.shifts.front()).size(), 2u);
    EXPECT_FALSE(p.iou_matrix().rows.empty());
  }
  const auto matrix_sha = sha256_file(dir.path() / "out/results/iou_matrix.json");
  {
    Pipeline p(cfg);
    EXPECT_EQ(p.generate(), StageResult::cached);
    EXPECT_EQ(p.train(), StageResult::cached);
    EXPECT_EQ(p.probe(), StageResult::cached);
    EXPECT_EQ(p.report(), StageResult::cached);
  }
  {
    PipelineOptions force;
    force.force = true;
    Pipeline p(cfg, force);
    EXPECT_EQ(p.generate(), StageResult::ran);
  }
  // A changed probe section reruns only the probe and report stages.
  auto changed = cfg;
  changed.probe.bins = 12;
  Pipeline p(changed);
  EXPECT_EQ(p.generate(), StageResult::cached);
  EXPECT_EQ(p.train(), StageResult::cached);
  EXPECT_EQ(p.probe(), StageResult::ran);
  EXPECT_EQ(sha256_file(dir.path() / "out/results/iou_matrix.json"), matrix_sha);
  EXPECT_TRUE(run_verify(changed).hard_passed());
}

TEST(Verify, TamperedDecoderWidthsFailTheParameterCheck) {
  auto cfg = desk_preset();
  EXPECT_TRUE(run_verify(cfg).hard_passed());
  cfg.model.decoder_channels = {256, 128, 64, 32, 32};
  const auto r = run_verify(cfg);
  EXPECT_FALSE(r.hard_passed());
  EXPECT_NE(r.to_text().find("FAIL parameter count"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  TempDir dir("cli");
  std::ofstream(dir.path() / "bad.json") << R"({"training": {"epochs": -1}})";
  EXPECT_EQ(run_cli("verify"), 0);
  EXPECT_EQ(run_cli("verify --config " + (dir.path() / "bad.json").string()), 2);
  EXPECT_EQ(run_cli("verify --desk-scale --paper-scale"), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("probe --ref-features " + dir.path().string()), 2);
  EXPECT_EQ(run_cli("probe --ref-features /nonexistent --shifted-features /nonexistent"), 1);
}

}  // namespace
}  // namespace skipshift
