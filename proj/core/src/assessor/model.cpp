#include "mosanet/assessor/model.hpp"

#include <algorithm>
#include <cmath>

#include "mosanet/common/error.hpp"
#include "mosanet/features/filterbank.hpp"
#include "mosanet/features/stft.hpp"
#include "mosanet/nn/ops.hpp"

namespace mosanet::assessor {

using features::Stream;
using nn::Tensor;

AttentionOutput multiplicative_attention(const Tensor& h, const Tensor& w) {
  if (w.rows() != h.cols() || w.cols() != h.cols()) throw UsageError("attention: W must be d x d with d = H columns");
  const Tensor scores = nn::matmul(nn::matmul(h, w), nn::transpose(h));
  AttentionOutput out;
  out.weights = nn::softmax_rows(scores);
  out.context = nn::matmul(out.weights, h);
  return out;
}

const TaskResult& AssessmentResult::at(Task t) const {
  auto it = tasks.find(t);
  if (it == tasks.end()) throw UsageError("assessment has no task " + to_string(t));
  return it->second;
}

namespace {

// Baseline CNN layers: (channels, square kernel).
constexpr std::pair<int, int> kCnnLayers[] = {{15, 5}, {25, 7}, {40, 9}, {50, 11}};
constexpr int kBlstmBaselineUnits = 100;
constexpr int kBlstmBaselineFc = 50;
constexpr int kCnnHeadHidden = 10;

std::string stream_key(Stream s) { return to_string(s); }

}  // namespace

Assessor::Assessor(AssessorConfig config, std::uint64_t seed) : config_(std::move(config)), seed_(seed) {
  validate(config_);
  const auto init = config_.init;
  const auto& c = config_;

  if (c.has_stream(Stream::LFB)) {
    features::FilterbankParams fb = features::mel_initialized_filterbank(c.features.lfb_filters);
    fb.kernel_taps = c.features.lfb_taps;
    fb.frame_length = c.features.stft.win_length;
    fb.hop = c.features.stft.hop;
    lfb_geometry_ = fb;
    const auto n = static_cast<Eigen::Index>(fb.low_hz.size());
    Matrix lo = Eigen::Map<const Matrix>(fb.low_hz.data(), n, 1);
    Matrix hi = Eigen::Map<const Matrix>(fb.high_hz.data(), n, 1);
    if (c.lfb_learnable) {
      lfb_low_ = params_.add("lfb.low_hz", lo);
      lfb_high_ = params_.add("lfb.high_hz", hi);
    } else {
      buffers_["lfb.low_hz"] = lo;
      buffers_["lfb.high_hz"] = hi;
    }
  }

  // Convolutional stack.
  if (c.arch == Arch::CRNN || c.arch == Arch::CRNN_AT) {
    int in = 1;
    int layer = 0;
    for (int ch : c.conv_channels) {
      for (int stride : c.conv_strides) {
        nn::Conv2dSpec spec;
        spec.stride_f = stride;
        convs_.emplace_back(params_, "conv." + std::to_string(layer), in, ch, spec, init, seed);
        in = ch;
        ++layer;
      }
    }
  } else if (c.arch == Arch::CNN) {
    int in = 1;
    int layer = 0;
    for (auto [ch, k] : kCnnLayers) {
      nn::Conv2dSpec spec;
      spec.kernel_t = spec.kernel_f = k;
      spec.pad_t = spec.pad_f = k / 2;
      convs_.emplace_back(params_, "conv." + std::to_string(layer), in, ch, spec, init, seed);
      in = ch;
      ++layer;
    }
  }

  // Per-stream projections into the common sequence.
  const int seq_dim = c.arch == Arch::CNN ? kCnnLayers[3].first : c.common_dim;
  for (Stream s : c.streams) {
    const std::string name = "proj." + stream_key(s);
    if (s == Stream::SSL) {
      projections_.emplace(s, nn::Linear(params_, name, c.ssl_dim, seq_dim, nn::InitScheme::LecunUniform, seed));
    } else if (c.arch == Arch::BLSTM) {
      projections_.emplace(s, nn::Linear(params_, name, stream_width(s), seq_dim, nn::InitScheme::LecunUniform, seed));
    } else if (c.arch != Arch::CNN) {
      const int width = c.conv_channels.back() * trunk_out_freq(stream_width(s));
      projections_.emplace(s, nn::Linear(params_, name, width, seq_dim, nn::InitScheme::LecunUniform, seed));
    }
  }

  int head_in = seq_dim;
  int head_hidden = c.fc_units;
  if (c.arch == Arch::CRNN || c.arch == Arch::CRNN_AT) {
    blstm_ = nn::BiLstm(params_, "blstm", seq_dim, c.blstm_units, seed);
    shared_fc_ = nn::Linear(params_, "fc", 2 * c.blstm_units, c.fc_units, init, seed);
    head_in = c.fc_units;
  } else if (c.arch == Arch::BLSTM) {
    blstm_ = nn::BiLstm(params_, "blstm", seq_dim, kBlstmBaselineUnits, seed);
    head_in = 2 * kBlstmBaselineUnits;
    head_hidden = kBlstmBaselineFc;
  } else {
    head_hidden = kCnnHeadHidden;
  }

  for (Task t : c.tasks) {
    const std::string p = "head." + to_string(t);
    Head h;
    if (c.arch == Arch::CRNN_AT) {
      h.attention = params_.add(p + ".attention", nn::init_matrix(head_in, head_in, static_cast<Eigen::Index>(head_in) * head_in,
                                                                  nn::InitScheme::LecunUniform, seed, p + ".attention"));
    }
    h.hidden = nn::Linear(params_, p + ".hidden", head_in, head_hidden, init, seed);
    h.out = nn::Linear(params_, p + ".out", head_hidden, 1, nn::InitScheme::LecunUniform, seed);
    heads_.emplace(t, std::move(h));
  }

  for (Stream s : c.streams) {
    const int w = stream_width(s);
    buffers_["norm." + stream_key(s) + ".mean"] = Matrix::Zero(1, w);
    buffers_["norm." + stream_key(s) + ".inv_std"] = Matrix::Ones(1, w);
  }
}

int Assessor::stream_width(Stream s) const {
  switch (s) {
    case Stream::PS: return config_.features.stft.bins();
    case Stream::COMPLEX: return 2 * config_.features.stft.bins();
    case Stream::LFB: return config_.features.lfb_filters;
    case Stream::SSL: return config_.ssl_dim;
  }
  return 0;
}

int Assessor::trunk_out_freq(int freq) const {
  nn::MapShape shape{1, 1, freq};
  for (const auto& conv : convs_) {
    nn::Conv2dSpec spec = conv.spec();
    spec.kernel_t = 1;
    spec.pad_t = 0;
    shape = nn::conv2d_output_shape(shape, conv.out_channels(), spec);
  }
  return shape.freq;
}

int Assessor::latent_dim() const {
  switch (config_.arch) {
    case Arch::BLSTM: return kBlstmBaselineFc;
    case Arch::CNN: return kCnnHeadHidden;
    default: return config_.fc_units;
  }
}

Tensor Assessor::stream_input(Stream s, const features::FeatureInputs& in) const {
  auto need = [&](const std::optional<Matrix>& m, const char* what) -> const Matrix& {
    if (!m) throw UsageError(std::string("features for '") + in.utt_id + "' lack the " + what + " stream");
    return *m;
  };
  switch (s) {
    case Stream::PS: {
      const Matrix& ps = need(in.ps, "PS");
      if (ps.cols() != stream_width(s)) throw UsageError("PS stream has the wrong bin count");
      return Tensor(ps.unaryExpr([](double v) { return std::log(v + features::kLogFloor); }));
    }
    case Stream::COMPLEX: {
      const Matrix& ri = need(in.complex, "COMPLEX");
      if (ri.cols() != stream_width(s)) throw UsageError("COMPLEX stream has the wrong bin count");
      return Tensor(ri);
    }
    case Stream::LFB: {
      if (in.waveform.empty()) throw UsageError("features for '" + in.utt_id + "' lack the waveform for LFB");
      if (config_.lfb_learnable) return features::sinc_filterbank(in.waveform, lfb_low_, lfb_high_, lfb_geometry_);
      const Tensor lo(buffers_.at("lfb.low_hz"));
      const Tensor hi(buffers_.at("lfb.high_hz"));
      return features::sinc_filterbank(in.waveform, lo, hi, lfb_geometry_);
    }
    case Stream::SSL: {
      const Matrix& e = need(in.ssl, "SSL");
      if (e.cols() != config_.ssl_dim) {
        throw UsageError("SSL stream has dimension " + std::to_string(e.cols()) + ", model expects " +
                         std::to_string(config_.ssl_dim));
      }
      return Tensor(e);
    }
  }
  throw UsageError("unknown stream");
}

Tensor Assessor::standardize(Stream s, const Tensor& x) const {
  const Matrix& mean = buffers_.at("norm." + stream_key(s) + ".mean");
  const Matrix& inv = buffers_.at("norm." + stream_key(s) + ".inv_std");
  const Tensor centred = nn::add_row(x, Tensor(Matrix(-mean)));
  return nn::mul(centred, Tensor(Matrix(inv.replicate(x.rows(), 1))));
}

Tensor Assessor::trunk(const Tensor& frames, int freq) const {
  nn::MapShape shape{1, static_cast<int>(frames.rows()), freq};
  Tensor x = nn::reshape(frames, 1, frames.rows() * freq);
  for (const auto& conv : convs_) {
    nn::MapShape next;
    x = nn::relu(conv(x, shape, &next));
    shape = next;
  }
  return config_.arch == Arch::CNN ? nn::freq_mean(x, shape) : nn::channels_to_frames(x, shape);
}

ForwardOutput Assessor::forward(const features::FeatureInputs& in) const {
  std::vector<std::pair<Stream, Tensor>> projected;
  for (Stream s : config_.streams) {
    const Tensor x = standardize(s, stream_input(s, in));
    if (s == Stream::SSL || config_.arch == Arch::BLSTM) {
      projected.emplace_back(s, projections_.at(s)(x));
    } else if (config_.arch == Arch::CNN) {
      projected.emplace_back(s, trunk(x, stream_width(s)));
    } else {
      projected.emplace_back(s, projections_.at(s)(trunk(x, stream_width(s))));
    }
  }
  const features::FeatureBundle bundle = features::assemble_bundle(projected);

  Tensor shared;
  switch (config_.arch) {
    case Arch::CRNN:
    case Arch::CRNN_AT: shared = nn::relu(shared_fc_(blstm_(bundle.sequence))); break;
    case Arch::BLSTM: shared = blstm_(bundle.sequence); break;
    case Arch::CNN: shared = bundle.sequence; break;
  }

  ForwardOutput out;
  out.segments = bundle.segments;
  out.total_frames = bundle.total_frames;
  for (const auto& [task, head] : heads_) {
    TaskOutput t;
    Tensor h = shared;
    if (config_.arch == Arch::CRNN_AT) {
      const AttentionOutput att = multiplicative_attention(shared, head.attention);
      t.attention = att.weights;
      h = att.context;
    }
    const Tensor pre = head.hidden(h);
    switch (config_.arch) {
      case Arch::BLSTM: t.latent = nn::elu(pre); break;
      case Arch::CNN: t.latent = nn::leaky_relu(pre); break;
      default: t.latent = nn::relu(pre); break;
    }
    t.frames = head.out(t.latent);
    t.utterance = nn::mean_all(t.frames);
    out.tasks.emplace(task, std::move(t));
  }
  return out;
}

AssessmentResult Assessor::assess(const features::FeatureInputs& in) const {
  nn::NoGradGuard guard;
  const ForwardOutput f = forward(in);
  AssessmentResult r;
  r.segments = f.segments;
  r.total_frames = f.total_frames;
  for (const auto& [task, t] : f.tasks) {
    TaskResult tr;
    tr.utterance_score = t.utterance.item();
    const Matrix& fr = t.frames.value();
    tr.frame_scores.assign(fr.data(), fr.data() + fr.size());
    if (t.attention.defined()) tr.attention = t.attention.value();
    tr.latent = t.latent.value();
    r.tasks.emplace(task, std::move(tr));
  }
  return r;
}

Matrix Assessor::extract_latent(const features::FeatureInputs& in, const std::vector<Task>& branch) const {
  if (branch.empty()) throw UsageError("extract_latent: empty branch");
  std::vector<Task> order = branch;
  std::sort(order.begin(), order.end());
  for (Task t : order) {
    if (!config_.has_task(t)) throw UsageError("extract_latent: branch " + to_string(t) + " is not trained in this model");
  }
  const AssessmentResult r = assess(in);
  const int d = latent_dim();
  Matrix out(r.total_frames, static_cast<Eigen::Index>(d) * order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.middleCols(static_cast<Eigen::Index>(i) * d, d) = r.at(order[i]).latent;
  }
  return out;
}

void Assessor::fit_normalization(const std::vector<const features::FeatureInputs*>& inputs) {
  if (inputs.empty()) throw UsageError("fit_normalization: no inputs");
  nn::NoGradGuard guard;
  for (Stream s : config_.streams) {
    const int w = stream_width(s);
    RowVector sum = RowVector::Zero(w), sq = RowVector::Zero(w);
    double n = 0.0;
    for (const auto* in : inputs) {
      const Matrix x = stream_input(s, *in).value();
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        sum += x.row(r);
        sq += x.row(r).cwiseProduct(x.row(r));
      }
      n += static_cast<double>(x.rows());
    }
    const RowVector mean = sum / n;
    Matrix inv(1, w);
    for (int j = 0; j < w; ++j) {
      const double var = std::max(0.0, sq(j) / n - mean(j) * mean(j));
      const double sd = std::sqrt(var);
      inv(0, j) = sd > 1e-8 ? 1.0 / sd : 1.0;
    }
    buffers_["norm." + stream_key(s) + ".mean"] = mean;
    buffers_["norm." + stream_key(s) + ".inv_std"] = inv;
  }
}

std::vector<Tensor> Assessor::trainable() const { return params_.tensors(); }

void Assessor::after_update() {
  if (config_.has_stream(Stream::LFB) && config_.lfb_learnable) features::project_bands(lfb_low_, lfb_high_);
}

nn::NamedMatrices Assessor::state() const {
  nn::NamedMatrices out;
  for (const auto& [name, t] : params_.items()) out.emplace_back(name, t.value());
  for (const auto& [name, m] : buffers_) out.emplace_back(name, m);
  return out;
}

void Assessor::load_state(const nn::NamedMatrices& entries, bool strict) {
  std::map<std::string, const Matrix*> by_name;
  for (const auto& [name, m] : entries) by_name[name] = &m;
  auto fetch = [&](const std::string& name, const Matrix& like) -> const Matrix* {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      if (strict) throw UsageError("checkpoint lacks parameter '" + name + "'");
      return nullptr;
    }
    if (it->second->rows() != like.rows() || it->second->cols() != like.cols()) {
      throw UsageError("checkpoint parameter '" + name + "' has the wrong shape");
    }
    const Matrix* found = it->second;
    by_name.erase(it);
    return found;
  };
  for (const auto& [name, t] : params_.items()) {
    Tensor handle = t;
    if (const Matrix* m = fetch(name, t.value())) handle.mutable_value() = *m;
  }
  for (auto& [name, m] : buffers_) {
    if (const Matrix* src = fetch(name, m)) m = *src;
  }
  if (strict && !by_name.empty()) {
    throw UsageError("checkpoint has parameter '" + by_name.begin()->first + "' unknown to the model");
  }
}

features::FeatureExtractor Assessor::make_extractor() const {
  return features::FeatureExtractor(config_.features, config_.streams);
}

}  // namespace mosanet::assessor
