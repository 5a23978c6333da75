#include "mosanet/features/bundle.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>

#include "mosanet/common/error.hpp"
#include "mosanet/nn/ops.hpp"

namespace mosanet::features {

std::string to_string(Stream s) {
  switch (s) {
    case Stream::PS: return "PS";
    case Stream::COMPLEX: return "COMPLEX";
    case Stream::LFB: return "LFB";
    case Stream::SSL: return "SSL";
  }
  return "?";
}

Stream parse_stream(const std::string& s) {
  std::string u = s;
  std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return std::toupper(c); });
  if (u == "PS") return Stream::PS;
  if (u == "COMPLEX" || u == "RI") return Stream::COMPLEX;
  if (u == "LFB") return Stream::LFB;
  if (u == "SSL") return Stream::SSL;
  throw UsageError("unknown feature stream '" + s + "'");
}

std::vector<Stream> parse_streams(const std::string& s) {
  std::vector<Stream> out;
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    const Stream st = parse_stream(token);
    if (std::find(out.begin(), out.end(), st) != out.end()) throw UsageError("stream '" + token + "' listed twice");
    out.push_back(st);
    token.clear();
  };
  for (char c : s) {
    if (c == '+' || c == ',' || c == ' ') {
      flush();
    } else {
      token += c;
    }
  }
  flush();
  if (out.empty()) throw UsageError("no feature streams given");
  return out;
}

std::string join_streams(const std::vector<Stream>& streams) {
  std::string out;
  for (std::size_t i = 0; i < streams.size(); ++i) {
    if (i) out += "+";
    out += to_string(streams[i]);
  }
  return out;
}

FeatureConfig feature_config_from(const config::Config& cfg) {
  FeatureConfig f;
  f.stft.n_fft = static_cast<int>(cfg.get_int("stft.n_fft", f.stft.n_fft));
  f.stft.win_length = static_cast<int>(cfg.get_int("stft.win_length", f.stft.win_length));
  f.stft.hop = static_cast<int>(cfg.get_int("stft.hop", f.stft.hop));
  const std::string window = cfg.get_string("stft.window", "hamming");
  if (window == "hamming") {
    f.stft.window = WindowKind::Hamming;
  } else if (window == "hann") {
    f.stft.window = WindowKind::Hann;
  } else {
    throw UsageError("stft.window: unknown window '" + window + "'");
  }
  if (f.stft.n_fft < 2 || f.stft.win_length < 1 || f.stft.win_length > f.stft.n_fft || f.stft.hop < 1) {
    throw UsageError("[stft] geometry is invalid");
  }
  f.lfb_filters = static_cast<int>(cfg.get_int("lfb.filters", f.lfb_filters));
  f.lfb_taps = static_cast<int>(cfg.get_int("lfb.kernel_taps", f.lfb_taps));
  if (f.lfb_filters < 1 || f.lfb_taps < 3 || f.lfb_taps % 2 == 0) throw UsageError("[lfb] geometry is invalid");
  f.ssl_provider = cfg.get_string("ssl.provider", f.ssl_provider);
  f.ssl_command = cfg.get_string("ssl.command", "");
  f.ssl_name = cfg.get_string("ssl.name", f.ssl_provider == "command" ? "command" : "stub");
  f.ssl_stub_dim = static_cast<int>(cfg.get_int("ssl.dim", f.ssl_stub_dim));
  f.ssl_cache_dir = cfg.get_string("ssl.cache_dir", "");
  if (f.ssl_cache_dir.empty()) {
    if (const char* env = std::getenv("MOSANET_SSL_CACHE")) f.ssl_cache_dir = env;
  }
  f.ssl_seed = static_cast<std::uint64_t>(cfg.get_int("ssl.seed", 0));
  return f;
}

std::set<std::string> feature_config_keys() {
  return {"stft.n_fft",    "stft.win_length", "stft.hop", "stft.window", "lfb.filters",  "lfb.kernel_taps",
          "ssl.provider", "ssl.command",     "ssl.name", "ssl.dim",     "ssl.cache_dir", "ssl.seed"};
}

FeatureExtractor::FeatureExtractor(FeatureConfig cfg, std::vector<Stream> streams)
    : cfg_(std::move(cfg)), streams_(std::move(streams)) {
  if (streams_.empty()) throw UsageError("no feature streams configured");
  if (std::find(streams_.begin(), streams_.end(), Stream::SSL) != streams_.end()) {
    provider_ = make_ssl_provider(cfg_.ssl_provider, cfg_.ssl_command, cfg_.ssl_seed, cfg_.ssl_stub_dim);
    if (!cfg_.ssl_cache_dir.empty()) cache_.emplace(cfg_.ssl_cache_dir);
  }
}

FeatureInputs FeatureExtractor::extract(const Waveform& w, const std::string& utt_id) const {
  validate(w);
  FeatureInputs in;
  in.utt_id = utt_id;
  in.waveform = w;
  in.stft_frames = frame_count(w.size(), cfg_.stft);
  const bool need_ps = std::find(streams_.begin(), streams_.end(), Stream::PS) != streams_.end();
  const bool need_ri = std::find(streams_.begin(), streams_.end(), Stream::COMPLEX) != streams_.end();
  if (need_ps || need_ri) {
    const ComplexFrames frames = stft(w, cfg_.stft);
    if (need_ps) in.ps = power_spec(frames).values;
    if (need_ri) in.complex = ri_features(frames).values;
  }
  if (std::find(streams_.begin(), streams_.end(), Stream::SSL) != streams_.end()) {
    in.ssl = ssl_embed(w, utt_id, provider_.get(), cache_ ? &*cache_ : nullptr, cfg_.ssl_name);
  }
  return in;
}

nn::Tensor project_ssl(const nn::Tensor& ssl, const nn::Tensor& weight, const nn::Tensor& bias) {
  if (ssl.cols() != weight.rows()) throw UsageError("project_ssl: SSL dimension does not match the projection");
  return nn::add_row(nn::matmul(ssl, weight), bias);
}

int FeatureBundle::frames_of(Stream s) const {
  for (const auto& seg : segments) {
    if (seg.stream == s) return seg.frames;
  }
  return 0;
}

FeatureBundle assemble_bundle(const std::vector<std::pair<Stream, nn::Tensor>>& projected) {
  if (projected.empty()) throw UsageError("assemble_bundle: no streams");
  FeatureBundle b;
  b.dim = static_cast<int>(projected.front().second.cols());
  std::vector<nn::Tensor> parts;
  for (const auto& [stream, t] : projected) {
    if (t.cols() != b.dim) {
      throw UsageError("assemble_bundle: stream " + to_string(stream) + " has dimension " +
                       std::to_string(t.cols()) + ", expected " + std::to_string(b.dim));
    }
    if (t.rows() < 1) throw UsageError("assemble_bundle: stream " + to_string(stream) + " is empty");
    b.segments.push_back({stream, static_cast<int>(t.rows())});
    b.total_frames += static_cast<int>(t.rows());
    parts.push_back(t);
  }
  b.sequence = parts.size() == 1 ? parts.front() : nn::concat_rows(parts);
  return b;
}

}  // namespace mosanet::features
