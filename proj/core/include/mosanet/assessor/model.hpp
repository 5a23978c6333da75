#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mosanet/assessor/config.hpp"
#include "mosanet/features/bundle.hpp"
#include "mosanet/nn/archive.hpp"
#include "mosanet/nn/layers.hpp"

namespace mosanet::assessor {

struct AttentionOutput {
  nn::Tensor context;  // L x d
  nn::Tensor weights;  // L x L, rows sum to 1
};

/// scores = H W H^T, weights = row softmax(scores), context = weights H.
AttentionOutput multiplicative_attention(const nn::Tensor& h, const nn::Tensor& w);

/// Graph outputs for one task.
struct TaskOutput {
  nn::Tensor utterance;  // 1 x 1, mean of `frames`
  nn::Tensor frames;     // L x 1
  nn::Tensor attention;  // L x L, CRNN_AT only
  nn::Tensor latent;     // L x d, input of the frame-score layer
};

struct ForwardOutput {
  std::map<Task, TaskOutput> tasks;
  std::vector<features::StreamSegment> segments;
  int total_frames = 0;
};

struct TaskResult {
  double utterance_score = 0.0;
  std::vector<double> frame_scores;
  Matrix attention;  // empty unless CRNN_AT
  Matrix latent;
};

struct AssessmentResult {
  std::map<Task, TaskResult> tasks;
  std::vector<features::StreamSegment> segments;
  int total_frames = 0;

  const TaskResult& at(Task t) const;
};

/// MOSA-Net and the baseline architectures. Streams other than SSL pass
/// through a convolutional trunk shared by all of them, are projected to a
/// common dimension and concatenated along time; SSL frames join through a
/// linear projection. Parameters are initialized deterministically from the
/// seed; per-stream input standardization statistics are fixed buffers.
class Assessor {
 public:
  Assessor(AssessorConfig config, std::uint64_t seed);

  const AssessorConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }

  ForwardOutput forward(const features::FeatureInputs& in) const;
  /// Inference without graph recording.
  AssessmentResult assess(const features::FeatureInputs& in) const;
  /// Per-task latents concatenated in Q, I, D order: L x (d * |branch|).
  Matrix extract_latent(const features::FeatureInputs& in, const std::vector<Task>& branch) const;

  /// Sets the standardization buffers from training inputs.
  void fit_normalization(const std::vector<const features::FeatureInputs*>& inputs);

  nn::ParameterStore& parameters() { return params_; }
  const nn::ParameterStore& parameters() const { return params_; }
  /// Parameters the optimizer updates (filterbank cutoffs only if learnable).
  std::vector<nn::Tensor> trainable() const;
  /// Restores constraints after an optimizer step (valid sinc bands).
  void after_update();
  std::size_t parameter_count() const { return params_.element_count(); }
  int latent_dim() const;

  /// Parameters followed by buffers, in a fixed order.
  nn::NamedMatrices state() const;
  /// Loads entries by name; with `strict`, every model entry must be present.
  /// Entries unknown to the model are ignored unless `strict`.
  void load_state(const nn::NamedMatrices& entries, bool strict);
  std::uint64_t state_hash() const { return nn::hash_matrices(state()); }

  features::FeatureExtractor make_extractor() const;

 private:
  struct Head {
    nn::Tensor attention;  // d x d, CRNN_AT only
    nn::Linear hidden;
    nn::Linear out;
  };

  nn::Tensor stream_input(features::Stream s, const features::FeatureInputs& in) const;
  nn::Tensor trunk(const nn::Tensor& frames, int freq) const;
  nn::Tensor standardize(features::Stream s, const nn::Tensor& x) const;
  int trunk_out_freq(int freq) const;
  int stream_width(features::Stream s) const;

  AssessorConfig config_;
  std::uint64_t seed_;
  nn::ParameterStore params_;
  std::map<std::string, Matrix> buffers_;  // norm.<stream>.mean / norm.<stream>.inv_std
  std::vector<nn::Conv2d> convs_;
  std::vector<int> conv_relu_;             // 1 when followed by ReLU
  std::map<features::Stream, nn::Linear> projections_;
  nn::BiLstm blstm_;
  nn::Linear shared_fc_;
  std::map<Task, Head> heads_;
  nn::Tensor lfb_low_, lfb_high_;
  features::FilterbankParams lfb_geometry_;
};

}  // namespace mosanet::assessor
