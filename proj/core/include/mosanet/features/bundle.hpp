#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mosanet/common/waveform.hpp"
#include "mosanet/config/config.hpp"
#include "mosanet/features/filterbank.hpp"
#include "mosanet/features/ssl.hpp"
#include "mosanet/features/stft.hpp"
#include "mosanet/nn/tensor.hpp"

namespace mosanet::features {

enum class Stream { PS, COMPLEX, LFB, SSL };

std::string to_string(Stream s);
Stream parse_stream(const std::string& s);
/// Parses "PS+LFB", "ps,ssl" and similar.
std::vector<Stream> parse_streams(const std::string& s);
std::string join_streams(const std::vector<Stream>& streams);

/// Sections [stft], [lfb] and [ssl] of a run configuration.
struct FeatureConfig {
  StftConfig stft;
  int lfb_filters = 80;
  int lfb_taps = 251;
  std::string ssl_provider = "stub";  // stub | command | none (cache only)
  std::string ssl_command;
  std::string ssl_name = "stub";      // cache namespace
  int ssl_stub_dim = 8;
  std::string ssl_cache_dir;
  std::uint64_t ssl_seed = 0;
};

FeatureConfig feature_config_from(const config::Config& cfg);
/// Declared keys of the three sections.
std::set<std::string> feature_config_keys();

/// Everything the assessor needs for one utterance before projection. The
/// waveform is kept because the filterbank stream is computed from the
/// model's own (learnable) cutoffs.
struct FeatureInputs {
  std::string utt_id;
  Waveform waveform;
  std::optional<Matrix> ps;       // frames x 257
  std::optional<Matrix> complex;  // frames x 514
  std::optional<Matrix> ssl;      // ssl frames x D_ssl
  int stft_frames = 0;
};

class FeatureExtractor {
 public:
  FeatureExtractor(FeatureConfig cfg, std::vector<Stream> streams);
  FeatureInputs extract(const Waveform& w, const std::string& utt_id) const;
  const FeatureConfig& config() const { return cfg_; }
  const std::vector<Stream>& streams() const { return streams_; }

 private:
  FeatureConfig cfg_;
  std::vector<Stream> streams_;
  std::unique_ptr<SslProvider> provider_;
  std::optional<SslCache> cache_;
};

/// Affine reduction of SSL frames to the common dimension.
nn::Tensor project_ssl(const nn::Tensor& ssl, const nn::Tensor& weight, const nn::Tensor& bias);

struct StreamSegment {
  Stream stream;
  int frames = 0;
};

/// Streams concatenated along time after projection to a common dimension.
struct FeatureBundle {
  nn::Tensor sequence;  // total_frames x dim
  std::vector<StreamSegment> segments;
  int total_frames = 0;
  int dim = 0;

  int frames_of(Stream s) const;
};

/// Throws UsageError when the projected streams disagree on dimension or
/// when no stream is given.
FeatureBundle assemble_bundle(const std::vector<std::pair<Stream, nn::Tensor>>& projected);

}  // namespace mosanet::features
