#include "mosanet/features/ssl.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sys/wait.h>
#include <unistd.h>

#include "mosanet/common/csv.hpp"
#include "mosanet/common/error.hpp"
#include "mosanet/common/rng.hpp"
#include "mosanet/corpus/wav.hpp"

namespace mosanet::features {

namespace {

constexpr char kMagic[8] = {'M', 'O', 'S', 'A', 'S', 'S', 'L', '1'};

Matrix through_float(const Matrix& m) {
  return m.unaryExpr([](double v) { return static_cast<double>(static_cast<float>(v)); });
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

}  // namespace

StubSslProvider::StubSslProvider(std::uint64_t seed, int dim) {
  if (dim < 1) throw UsageError("stub SSL provider: dim must be positive");
  Rng rng(derive_seed(seed, "ssl.stub.projection"));
  projection_.resize(kWindow, dim);
  const double s = 1.0 / std::sqrt(static_cast<double>(kWindow));
  for (Eigen::Index i = 0; i < projection_.size(); ++i) projection_.data()[i] = rng.normal() * s;
}

Matrix StubSslProvider::embed(const Waveform& w) const {
  if (w.size() < static_cast<std::size_t>(kWindow)) throw UsageError("stub SSL provider: signal shorter than 25 ms");
  const Eigen::Index frames = 1 + static_cast<Eigen::Index>((w.size() - kWindow) / kStride);
  Matrix out(frames, projection_.cols());
  for (Eigen::Index t = 0; t < frames; ++t) {
    Eigen::Map<const RowVector> frame(w.samples.data() + t * kStride, kWindow);
    out.row(t) = (10.0 * (frame * projection_)).array().tanh().matrix();
  }
  return out;
}

CommandSslProvider::CommandSslProvider(std::string command, std::string name)
    : command_(std::move(command)), name_(std::move(name)) {
  if (command_.empty()) throw UsageError("ssl provider command is empty");
}

Matrix CommandSslProvider::embed(const Waveform& w) const {
  char tmpl[] = "/tmp/mosanet_ssl_XXXXXX";
  if (!mkdtemp(tmpl)) throw Error("cannot create temporary directory for SSL provider");
  const std::filesystem::path dir(tmpl);
  const auto wav = dir / "input.wav";
  const auto out = dir / "embedding.bin";
  corpus::save_waveform(wav, w);
  const std::string cmd = command_ + " " + shell_quote(wav.string()) + " " + shell_quote(out.string()) +
                          " 2>" + shell_quote((dir / "stderr.txt").string());
  const int status = std::system(cmd.c_str());
  std::string diag;
  if (std::filesystem::exists(dir / "stderr.txt")) diag = read_text_file(dir / "stderr.txt");
  if (status != 0 || !std::filesystem::exists(out)) {
    std::filesystem::remove_all(dir);
    throw Error("ssl provider '" + name_ + "' failed (status " + std::to_string(status) + "): " + diag);
  }
  Matrix m = read_ssl_matrix(out);
  std::filesystem::remove_all(dir);
  return m;
}

void write_ssl_matrix(const std::filesystem::path& path, const Matrix& m) {
  static_assert(std::endian::native == std::endian::little);
  std::string data(kMagic, 8);
  const std::uint32_t dims[2] = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
  data.append(reinterpret_cast<const char*>(dims), sizeof(dims));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const float f = static_cast<float>(m.data()[i]);
    data.append(reinterpret_cast<const char*>(&f), sizeof(f));
  }
  write_file_atomic(path, data);
}

Matrix read_ssl_matrix(const std::filesystem::path& path) {
  const std::string data = read_text_file(path);
  if (data.size() < 16 || std::memcmp(data.data(), kMagic, 8) != 0) {
    throw UsageError(path.string() + ": not an SSL embedding file");
  }
  std::uint32_t dims[2];
  std::memcpy(dims, data.data() + 8, sizeof(dims));
  const std::size_t n = static_cast<std::size_t>(dims[0]) * dims[1];
  if (data.size() != 16 + n * sizeof(float)) throw UsageError(path.string() + ": SSL embedding file size mismatch");
  Matrix m(dims[0], dims[1]);
  for (std::size_t i = 0; i < n; ++i) {
    float f;
    std::memcpy(&f, data.data() + 16 + i * sizeof(float), sizeof(float));
    m.data()[i] = f;
  }
  return m;
}

std::filesystem::path SslCache::path_for(const std::string& utt_id, const std::string& provider) const {
  return dir_ / provider / (utt_id + ".bin");
}

std::optional<Matrix> SslCache::load(const std::string& utt_id, const std::string& provider) const {
  const auto p = path_for(utt_id, provider);
  if (!std::filesystem::exists(p)) return std::nullopt;
  return read_ssl_matrix(p);
}

void SslCache::store(const std::string& utt_id, const std::string& provider, const Matrix& m) const {
  write_ssl_matrix(path_for(utt_id, provider), m);
}

Matrix ssl_embed(const Waveform& w, const std::string& utt_id, const SslProvider* provider,
                 const SslCache* cache, const std::string& provider_name) {
  const std::string name = provider ? provider->name() : provider_name;
  if (cache && !name.empty()) {
    if (auto hit = cache->load(utt_id, name)) return *hit;
  }
  if (!provider) throw UsageError("ssl provider unavailable and no cached embedding for '" + utt_id + "'");
  Matrix m = through_float(provider->embed(w));
  if (cache) cache->store(utt_id, name, m);
  return m;
}

std::unique_ptr<SslProvider> make_ssl_provider(const std::string& kind, const std::string& command,
                                               std::uint64_t seed, int stub_dim) {
  if (kind == "stub") return std::make_unique<StubSslProvider>(seed, stub_dim);
  if (kind == "command") return std::make_unique<CommandSslProvider>(command, "command");
  if (kind == "none" || kind.empty()) return nullptr;
  throw UsageError("unknown ssl provider '" + kind + "'");
}

}  // namespace mosanet::features
