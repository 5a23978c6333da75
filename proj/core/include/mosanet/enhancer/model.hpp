#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "mosanet/assessor/config.hpp"
#include "mosanet/config/config.hpp"
#include "mosanet/features/stft.hpp"
#include "mosanet/nn/archive.hpp"
#include "mosanet/nn/layers.hpp"

namespace mosanet::enhancer {

using assessor::Task;

struct EnhancerConfig {
  std::vector<int> conv_channels{16, 32, 64, 128};
  std::vector<int> conv_strides{1, 1, 3};  // along frequency
  int fc_units = 128;
  int injection_layer = 6;  // latent joins the input of conv layer k+1
  std::vector<Task> latent_branch{Task::Q, Task::I};
  bool use_latent = true;
  int latent_dim = 128;  // per branch
  nn::InitScheme init = nn::InitScheme::HeUniform;
  features::StftConfig stft;

  int conv_layers() const { return static_cast<int>(conv_channels.size() * conv_strides.size()); }
  /// Width of the latent slice fed to layer k+1 (0 without latent).
  int latent_width() const { return use_latent ? latent_dim * static_cast<int>(latent_branch.size()) : 0; }
};

void validate(const EnhancerConfig& c);
/// The same network without the latent input.
EnhancerConfig baseline_config(EnhancerConfig c);

EnhancerConfig enhancer_config_from(const config::Config& cfg);
std::set<std::string> enhancer_config_keys();
std::string to_json(const EnhancerConfig& c);
EnhancerConfig enhancer_config_from_json(const std::string& text);

/// Nearest-frame resampling of an L_A x D latent onto `frames` rows.
Matrix align_latent(const Matrix& latent, int frames);

/// CNN spectral mapping from noisy LPS to clean LPS. With a latent, the
/// input of conv layer k+1 is the channel concatenation [H_k ; A], where A is
/// broadcast over the frequency axis. The layer is stored as two kernels, one
/// per slice, so the plain network is the same computation with the latent
/// slice removed.
class Enhancer {
 public:
  Enhancer(EnhancerConfig config, std::uint64_t seed);

  const EnhancerConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }

  /// noisy_lps: T x bins; latent: T' x latent_width(), required iff use_latent.
  nn::Tensor forward(const Matrix& noisy_lps, const Matrix* latent) const;
  Matrix enhance(const Matrix& noisy_lps, const Matrix* latent) const;

  /// Standardization statistics of the noisy LPS input.
  void fit_normalization(const std::vector<const Matrix*>& noisy_lps);

  nn::ParameterStore& parameters() { return params_; }
  const nn::ParameterStore& parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.element_count(); }
  /// Input channel count of conv layer k+1.
  int injection_width() const;

  nn::NamedMatrices state() const;
  void load_state(const nn::NamedMatrices& entries, bool strict);
  std::uint64_t state_hash() const { return nn::hash_matrices(state()); }

 private:
  EnhancerConfig config_;
  std::uint64_t seed_;
  nn::ParameterStore params_;
  std::vector<nn::Conv2d> convs_;
  nn::Conv2d latent_conv_;  // latent slice of layer k+1, no bias
  nn::Linear fc_;
  nn::Linear out_;
  Matrix mean_, inv_std_;
  int trunk_freq_ = 0;
};

}  // namespace mosanet::enhancer
