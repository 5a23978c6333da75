#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "mosanet/common/csv.hpp"
#include "mosanet/common/error.hpp"
#include "mosanet/corpus/wav.hpp"
#include "mosanet/training/loss.hpp"
#include "mosanet/training/train.hpp"
#include "toy.hpp"

namespace fs = std::filesystem;
using namespace mosanet;
using namespace mosanet::training;
using assessor::Task;

namespace {

assessor::AssessorConfig tiny() {
  assessor::AssessorConfig c;
  c.conv_channels = {4};
  c.conv_layers = 3;
  c.blstm_units = 8;
  c.fc_units = 8;
  c.common_dim = 8;
  return c;
}

}  // namespace

TEST(Loss, ZeroForPerfectPredictions) {
  assessor::AssessmentResult r;
  r.tasks[Task::I].frame_scores = {0.7, 0.7, 0.7};
  r.tasks[Task::I].utterance_score = 0.7;
  EXPECT_EQ(multitask_loss({r}, {{{Task::I, 0.7}}}, {}).total, 0.0);
  EXPECT_THROW(multitask_loss({r}, {{{Task::Q, 0.7}}}, {}), UsageError);
  LossWeights w;
  w.gamma_i = -1;
  EXPECT_THROW(multitask_loss({r}, {{{Task::I, 0.7}}}, w), UsageError);
}

TEST(Loss, AlphaWeightsFrameTerm) {
  assessor::AssessmentResult r;
  r.tasks[Task::D].frame_scores = {1.0, 3.0};
  r.tasks[Task::D].utterance_score = 2.0;
  LossWeights w;
  w.alpha_d = 0.5;
  w.gamma_d = 2.0;
  // (2-2)^2 + 0.5/2 * ((2-1)^2 + (2-3)^2) = 0.5, times gamma.
  EXPECT_DOUBLE_EQ(multitask_loss({r}, {{{Task::D, 2.0}}}, w).total, 1.0);
}

TEST(Train, SameSeedSameHistory) {
  auto run = [] {
    assessor::Assessor m(tiny(), 1);
    const auto data = toy::labeled(toy::noisy_set(4, 0.7, 1), m);
    toy::fit_normalization(m, data);
    TrainConfig tc;
    tc.epochs = 3;
    tc.heldout_fraction = 0.25;
    tc.seed = 3;
    auto result = train(m, data, tc, {});
    return std::make_pair(result, m.state_hash());
  };
  const auto [a, ha] = run();
  const auto [b, hb] = run();
  ASSERT_EQ(a.history.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a.history[i].total_loss, b.history[i].total_loss);
  EXPECT_EQ(ha, hb);
  EXPECT_GE(a.best_epoch, 1);
}

TEST(Train, RejectsBadConfig) {
  TrainConfig tc;
  tc.batch_size = 0;
  EXPECT_THROW(validate(tc), UsageError);
  tc = {};
  tc.optimizer = "lbfgs";
  EXPECT_THROW(validate(tc), UsageError);
  tc = {};
  tc.heldout_fraction = 1.0;
  EXPECT_THROW(validate(tc), UsageError);
}

TEST(Train, FrozenPrefixesStayPut) {
  assessor::Assessor m(tiny(), 2);
  const auto data = toy::labeled(toy::noisy_set(2, 0.7, 2), m);
  toy::fit_normalization(m, data);
  const Matrix before = m.parameters().get("conv.0.weight").value();
  const Matrix head_before = m.parameters().get("head.Q.out.weight").value();
  TrainConfig tc;
  tc.epochs = 1;
  tc.heldout_fraction = 0;
  tc.frozen_prefixes = {"conv."};
  train(m, data, tc, {});
  EXPECT_EQ(m.parameters().get("conv.0.weight").value(), before);
  EXPECT_NE(m.parameters().get("head.Q.out.weight").value(), head_before);
}

TEST(History, CsvColumns) {
  assessor::EpochRecord r;
  r.epoch = 1;
  r.total_loss = 0.5;
  r.task_loss = {{"I", 0.2}, {"D", 0.3}};
  const auto path = fs::temp_directory_path() / "mosanet_history_test.csv";
  write_history_csv(path, {r}, {Task::I, Task::D});
  const auto rows = read_csv(path);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"epoch", "total_loss", "loss_I", "loss_D", "heldout_loss",
                                               "max_grad_norm", "clipped_steps"}));
  EXPECT_EQ(rows[1][2], "0.2");
}

TEST(Adapt, RetargetsToSubjectiveScores) {
  assessor::Assessor pre(tiny(), 3);
  AdaptConfig ac;
  const auto warm = make_adapted_model(pre, ac);
  EXPECT_EQ(warm->config().tasks, (std::vector<Task>{Task::Q, Task::I}));
  EXPECT_EQ(warm->config().targets.at(Task::Q), "mos");
  EXPECT_EQ(warm->config().targets.at(Task::I), "intel");
  EXPECT_EQ(warm->parameters().get("conv.0.weight").value(), pre.parameters().get("conv.0.weight").value());
  ac.warm_start = false;
  const auto cold = make_adapted_model(pre, ac);
  EXPECT_FALSE(cold->parameters().contains("head.D.out.weight"));
}

TEST(Evaluate, GroupsRatersAndReportsDegenerate) {
  const auto dir = fs::temp_directory_path() / "mosanet_eval_test";
  fs::create_directories(dir);
  const auto set = toy::noisy_set(3, 0.7, 4);
  corpus::Manifest m;
  for (const auto& u : set) {
    corpus::save_waveform(dir / (u.id + ".wav"), u.noisy);
    corpus::save_waveform(dir / (u.id + "_clean.wav"), u.clean);
    for (int rater = 0; rater < 2; ++rater) {
      corpus::ManifestEntry e;
      e.utt_id = u.id + "_r" + std::to_string(rater);
      e.clean_path = dir / (u.id + "_clean.wav");
      e.degraded_path = dir / (u.id + ".wav");
      e.kind = corpus::Kind::Noisy;
      e.noise_type = "white";
      e.snr_db = u.snr_db;
      e.split = corpus::Split::TestSeen;
      e.scores.stoi = 0.5;  // constant truth: correlations undefined
      e.scores.sdi = 1.0 + rater + u.snr_db;
      m.push_back(e);
    }
  }
  auto cfg = tiny();
  cfg.tasks = {Task::I, Task::D};
  assessor::Assessor model(cfg, 4);
  const auto report = evaluate_model(model, m, "tiny", 1);
  ASSERT_EQ(report.rows.size(), 2u);
  EXPECT_EQ(report.rows[0].n, 3u);
  EXPECT_EQ(report.rows[0].status, "degenerate");
  EXPECT_FALSE(report.rows[0].lcc.has_value());
  EXPECT_EQ(report.rows[1].status, "ok");
  EXPECT_EQ(report.predictions[1].truth[0], 1.5 + set[0].snr_db);
  EXPECT_FALSE(report.warnings.empty());  // train and test_unseen are empty
}
