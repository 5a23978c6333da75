#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mosanet/assessor/model.hpp"
#include "mosanet/common/waveform.hpp"
#include "mosanet/enhancer/model.hpp"

namespace mosanet::enhancer {

/// Prepared training example: LPS of both signals plus the frozen assessor's
/// latent for the noisy one.
struct SeExample {
  std::string utt_id;
  Matrix noisy_lps;
  Matrix clean_lps;
  Matrix latent;  // empty without use_latent
};

struct SePair {
  std::string utt_id;
  Waveform noisy;
  Waveform clean;
};

/// The assessor must read STFT streams only (PS or COMPLEX).
void check_assessor_compatible(const EnhancerConfig& config, const assessor::Assessor& model);

/// Latent of the noisy waveform, or an empty matrix without use_latent.
Matrix latent_for(const EnhancerConfig& config, const assessor::Assessor* model, const Waveform& noisy,
                  const std::string& utt_id);

std::vector<SeExample> prepare_examples(const std::vector<SePair>& pairs, const EnhancerConfig& config,
                                        const assessor::Assessor* model, int jobs);

struct SeTrainConfig {
  std::string optimizer = "adam";
  double learning_rate = 1e-3;
  int epochs = 20;
  int batch_size = 1;  // >= data size gives full-batch descent
  std::uint64_t seed = 0;
  double clip_norm = 5.0;
};

void validate(const SeTrainConfig& c);

struct SeEpoch {
  int epoch = 0;
  double loss = 0.0;  // mean LPS MSE over the epoch's updates
  double wall_s = 0.0;
};

struct SeTrainResult {
  std::vector<SeEpoch> history;
};

/// Mean squared LPS error, averaged per utterance then over utterances.
double lps_mse(const Enhancer& se, const std::vector<SeExample>& data);
double noisy_lps_mse(const std::vector<SeExample>& data);

/// Fits the input statistics on first use, then minimizes the LPS MSE against
/// clean. `frozen` is only read; its state hash is compared before and after
/// and a change aborts with an Error.
SeTrainResult train_se(Enhancer& se, const assessor::Assessor* frozen, const std::vector<SeExample>& data,
                       const SeTrainConfig& config, const std::function<void(const SeEpoch&)>& on_epoch = {});

/// LPS -> enhanced LPS -> exp(LPS/2) magnitude -> ISTFT with the noisy phase,
/// trimmed or padded to the input length.
Waveform enhance_utterance(const Enhancer& se, const assessor::Assessor* model, const Waveform& noisy,
                           const std::string& utt_id = "input");

struct SeCheckpointMeta {
  int epoch = 0;
  std::string optimizer = "adam";
  double learning_rate = 1e-3;
  std::string assessor_config_hash;     // empty without latent
  std::string assessor_parameter_hash;  // empty without latent
  std::vector<SeEpoch> history;
};

void save_se_checkpoint(const std::filesystem::path& path, const Enhancer& se, const SeCheckpointMeta& meta);

struct LoadedEnhancer {
  std::unique_ptr<Enhancer> model;
  SeCheckpointMeta meta;
};

LoadedEnhancer load_se_checkpoint(const std::filesystem::path& path);

/// Throws UsageError unless `model` is the assessor the enhancer was trained with.
void check_pairing(const LoadedEnhancer& se, const assessor::Assessor* model);

}  // namespace mosanet::enhancer
