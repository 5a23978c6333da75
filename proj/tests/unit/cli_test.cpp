#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "mosanet/common/csv.hpp"

namespace fs = std::filesystem;

#ifdef MOSANET_CLI_PATH

namespace {

int run_cli(const std::string& args) {
  const auto log = fs::temp_directory_path() / "mosanet_cli_test.log";
  const std::string cmd = std::string("\"") + MOSANET_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string last_output() {
  return mosanet::read_text_file(fs::temp_directory_path() / "mosanet_cli_test.log");
}

}  // namespace

TEST(Cli, HelpForEveryCommand) {
  EXPECT_EQ(run_cli("--help"), 0);
  for (const char* cmd : {"prep", "label", "train", "adapt", "eval", "enhance", "plot"}) {
    EXPECT_EQ(run_cli(std::string(cmd) + " --help"), 0) << cmd;
  }
  EXPECT_EQ(run_cli("frobnicate"), 1);
}

TEST(Cli, UsageErrorsExitOne) {
  const auto out = fs::temp_directory_path() / "mosanet_cli_runs";
  const std::string o = " -o \"" + out.string() + "\"";
  EXPECT_EQ(run_cli("prep --synthetic 2 --set train.nonsense=1" + o), 1);
  EXPECT_NE(last_output().find("train.nonsense"), std::string::npos);
  EXPECT_EQ(run_cli("prep" + o), 1);  // neither --clean-list nor --synthetic
  EXPECT_EQ(run_cli("train -m /nonexistent/manifest.jsonl" + o), 1);
}

TEST(Cli, PrepWritesSplitsAndRunRecord) {
  const auto out = fs::temp_directory_path() / "mosanet_cli_runs";
  fs::remove_all(out / "prep_test");
  ASSERT_EQ(run_cli("prep --synthetic 4 --run-id prep_test --seed 5 -o \"" + out.string() + "\""), 0) << last_output();
  const auto run = out / "prep_test";
  for (const char* f : {"manifest.jsonl", "train.jsonl", "test_seen.jsonl", "test_unseen.jsonl", "config.toml",
                        "run.json"}) {
    EXPECT_TRUE(fs::exists(run / f)) << f;
  }
  EXPECT_NE(mosanet::read_text_file(run / "run.json").find("\"seed\": 5"), std::string::npos);

  const std::string m = " -m \"" + (run / "manifest.jsonl").string() + "\" -o \"" + out.string() + "\"";
  EXPECT_EQ(run_cli("train" + m + " --set model.arch=transformer"), 1);
  EXPECT_EQ(run_cli("train" + m + " --set model.tasks=Q"), 1);  // unlabeled: no pesq scores
  EXPECT_NE(last_output().find("pesq"), std::string::npos);
}

#endif
