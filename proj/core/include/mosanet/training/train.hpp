#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mosanet/assessor/checkpoint.hpp"
#include "mosanet/assessor/model.hpp"
#include "mosanet/corpus/manifest.hpp"
#include "mosanet/training/loss.hpp"

namespace mosanet::training {

struct TrainConfig {
  std::string optimizer = "adam";
  double learning_rate = 1e-4;
  int batch_size = 1;
  int epochs = 100;
  std::uint64_t seed = 0;
  int early_stop_patience = 15;
  double heldout_fraction = 0.1;  // 0 disables the held-out slice
  double clip_norm = 5.0;
  /// Parameters whose names start with one of these are not updated.
  std::vector<std::string> frozen_prefixes;
};

void validate(const TrainConfig& c);

struct LabeledUtterance {
  features::FeatureInputs inputs;
  Truth truth;
};

/// Loads audio and features for every entry and maps manifest scores onto
/// the model's task targets. Throws UsageError naming the first entry that
/// lacks a required score.
std::vector<LabeledUtterance> prepare_dataset(const corpus::Manifest& manifest, const assessor::Assessor& model,
                                              int jobs);

struct TrainResult {
  std::vector<assessor::EpochRecord> history;
  int best_epoch = 0;
  int epochs_run = 0;
  bool stopped_early = false;
};

using EpochCallback = std::function<void(const assessor::EpochRecord&)>;

/// Seeded, utterance-order-shuffled mini-batch training. The best state by
/// held-out loss (training loss when no held-out slice is used) is restored
/// at the end. Throws Error on a non-finite loss naming epoch and utterance.
TrainResult train(assessor::Assessor& model, const std::vector<LabeledUtterance>& data, const TrainConfig& config,
                  const LossWeights& weights, const EpochCallback& on_epoch = {});

/// Per-epoch history CSV: epoch,total_loss,loss_<task>...,heldout_loss,
/// max_grad_norm,clipped_steps. Wall time stays out so reruns compare equal.
void write_history_csv(const std::filesystem::path& path, const std::vector<assessor::EpochRecord>& history,
                       const std::vector<Task>& tasks);

struct AdaptConfig {
  TrainConfig train;
  bool learning_rate_set = false;  // otherwise half the pre-training rate
  bool warm_start = true;
  bool freeze_ssl_projection = false;
  std::string quality_target = "mos";
  std::string intelligibility_target = "intel";
};

/// Model for subjective targets: tasks {Q, I} retargeted to MOS and
/// subjective intelligibility, D dropped. With warm_start every shared
/// parameter starts from the pre-trained values; otherwise it is a fresh
/// initialization of the same architecture.
std::unique_ptr<assessor::Assessor> make_adapted_model(const assessor::Assessor& pretrained, const AdaptConfig& config);

struct AdaptResult {
  std::unique_ptr<assessor::Assessor> model;
  TrainResult train;
  double learning_rate = 0.0;
};

AdaptResult adapt(const assessor::LoadedAssessor& pretrained, const corpus::Manifest& subjective,
                  const AdaptConfig& config, const LossWeights& weights, int jobs,
                  const EpochCallback& on_epoch = {});

struct EvalRow {
  std::string model;
  std::string split;
  std::string task;   // Q / I / D
  std::string target; // manifest score key
  std::size_t n = 0;
  std::optional<double> lcc, srcc;
  double mse = 0.0;
  std::string status = "ok";  // "degenerate" when a correlation is undefined
};

struct EvalPrediction {
  std::string split;
  std::string task;
  std::vector<std::string> ids;
  std::vector<double> predicted;
  std::vector<double> truth;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<EvalPrediction> predictions;
  std::vector<std::string> warnings;
};

/// Utterance-level predictions per split (train, test_seen, test_unseen) and
/// their LCC/SRCC/MSE per task. Entries sharing a degraded file (several
/// raters) are averaged into one truth. Empty splits are skipped with a
/// warning.
EvalReport evaluate_model(const assessor::Assessor& model, const corpus::Manifest& manifest,
                          const std::string& model_name, int jobs);

/// Columns: model,split,task,target,n,LCC,SRCC,MSE,status.
void write_results_csv(const std::filesystem::path& path, const std::vector<EvalRow>& rows);

}  // namespace mosanet::training
