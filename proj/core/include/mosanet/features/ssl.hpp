#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "mosanet/common/matrix.hpp"
#include "mosanet/common/waveform.hpp"

namespace mosanet::features {

/// Source of self-supervised speech embeddings (frames x dim). Pretrained
/// backbones are reached through CommandSslProvider or a pre-filled cache.
class SslProvider {
 public:
  virtual ~SslProvider() = default;
  virtual std::string name() const = 0;
  virtual Matrix embed(const Waveform& w) const = 0;
};

/// Deterministic stand-in with a 20 ms stride and 25 ms receptive field: each
/// frame is tanh of a seeded random projection of its samples.
class StubSslProvider final : public SslProvider {
 public:
  static constexpr int kStride = 320;
  static constexpr int kWindow = 400;

  explicit StubSslProvider(std::uint64_t seed = 0, int dim = 8);
  std::string name() const override { return "stub"; }
  Matrix embed(const Waveform& w) const override;
  int dim() const { return static_cast<int>(projection_.cols()); }

 private:
  Matrix projection_;  // kWindow x dim
};

/// Runs `<command> <input.wav> <output.bin>`; the command must write an SSL
/// cache file (see write_ssl_matrix).
class CommandSslProvider final : public SslProvider {
 public:
  CommandSslProvider(std::string command, std::string name);
  std::string name() const override { return name_; }
  Matrix embed(const Waveform& w) const override;

 private:
  std::string command_;
  std::string name_;
};

/// Cache file: "MOSASSL1", u32 frames, u32 dim (little-endian), then
/// frames * dim float32 row-major.
void write_ssl_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix read_ssl_matrix(const std::filesystem::path& path);

/// Per-utterance cache laid out as <dir>/<provider>/<utt_id>.bin.
class SslCache {
 public:
  explicit SslCache(std::filesystem::path dir) : dir_(std::move(dir)) {}
  std::filesystem::path path_for(const std::string& utt_id, const std::string& provider) const;
  std::optional<Matrix> load(const std::string& utt_id, const std::string& provider) const;
  void store(const std::string& utt_id, const std::string& provider, const Matrix& m) const;

 private:
  std::filesystem::path dir_;
};

/// Cache first, then provider (storing the result). Values always pass
/// through float32 so cached and fresh results are identical.
/// `provider_name` selects the cache namespace when no provider is given.
Matrix ssl_embed(const Waveform& w, const std::string& utt_id, const SslProvider* provider,
                 const SslCache* cache, const std::string& provider_name = "");

std::unique_ptr<SslProvider> make_ssl_provider(const std::string& kind, const std::string& command,
                                               std::uint64_t seed, int stub_dim);

}  // namespace mosanet::features
