#include "mosanet/enhancer/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <nlohmann/json.hpp>

#include "mosanet/common/error.hpp"
#include "mosanet/nn/ops.hpp"

namespace mosanet::enhancer {

using nlohmann::json;
using nn::Tensor;

void validate(const EnhancerConfig& c) {
  if (c.conv_channels.empty() || c.conv_strides.empty()) throw UsageError("enhancer: empty conv layout");
  for (int v : c.conv_channels) {
    if (v < 1) throw UsageError("enhancer: conv channels must be positive");
  }
  for (int v : c.conv_strides) {
    if (v < 1) throw UsageError("enhancer: conv strides must be positive");
  }
  if (c.fc_units < 1) throw UsageError("enhancer: fc_units must be positive");
  if (c.injection_layer < 1 || c.injection_layer > c.conv_layers() - 1) {
    throw UsageError("enhancer: injection_layer must be in [1, " + std::to_string(c.conv_layers() - 1) + "]");
  }
  if (!c.use_latent && !c.latent_branch.empty()) throw UsageError("enhancer: latent_branch must be empty without use_latent");
  if (c.use_latent) {
    if (c.latent_branch.empty()) throw UsageError("enhancer: use_latent needs a latent_branch");
    if (!std::is_sorted(c.latent_branch.begin(), c.latent_branch.end())) {
      throw UsageError("enhancer: latent_branch must be in Q, I, D order");
    }
    if (c.latent_dim < 1) throw UsageError("enhancer: latent_dim must be positive");
  }
}

EnhancerConfig baseline_config(EnhancerConfig c) {
  c.use_latent = false;
  c.latent_branch.clear();
  return c;
}

EnhancerConfig enhancer_config_from(const config::Config& cfg) {
  EnhancerConfig c;
  auto ints = [&](const std::string& key, const std::vector<int>& fallback) {
    std::vector<double> d(fallback.begin(), fallback.end());
    std::vector<int> out;
    for (double v : cfg.get_double_list(key, d)) out.push_back(static_cast<int>(v));
    return out;
  };
  c.conv_channels = ints("enhancer.conv_channels", c.conv_channels);
  c.conv_strides = ints("enhancer.conv_strides", c.conv_strides);
  c.fc_units = static_cast<int>(cfg.get_int("enhancer.fc_units", c.fc_units));
  c.injection_layer = static_cast<int>(cfg.get_int("enhancer.injection_layer", c.injection_layer));
  c.use_latent = cfg.get_bool("enhancer.use_latent", c.use_latent);
  const std::string branch = cfg.get_string("enhancer.latent_branch", c.use_latent ? "Q,I" : "");
  c.latent_branch = branch.empty() ? std::vector<Task>{} : assessor::parse_tasks(branch);
  if (!c.use_latent) c.latent_branch.clear();
  c.init = assessor::parse_init(cfg.get_string("enhancer.init", assessor::to_string(c.init)));
  c.stft = features::feature_config_from(cfg).stft;
  return c;
}

std::set<std::string> enhancer_config_keys() {
  return {"enhancer.conv_channels", "enhancer.conv_strides", "enhancer.fc_units", "enhancer.injection_layer",
          "enhancer.use_latent",    "enhancer.latent_branch", "enhancer.init"};
}

std::string to_json(const EnhancerConfig& c) {
  json j{{"conv_channels", c.conv_channels},
         {"conv_strides", c.conv_strides},
         {"fc_units", c.fc_units},
         {"injection_layer", c.injection_layer},
         {"use_latent", c.use_latent},
         {"latent_branch", assessor::join_tasks(c.latent_branch)},
         {"latent_dim", c.latent_dim},
         {"init", assessor::to_string(c.init)},
         {"n_fft", c.stft.n_fft},
         {"win_length", c.stft.win_length},
         {"hop", c.stft.hop},
         {"window", c.stft.window == features::WindowKind::Hamming ? "hamming" : "hann"}};
  return j.dump();
}

EnhancerConfig enhancer_config_from_json(const std::string& text) {
  EnhancerConfig c;
  try {
    const json j = json::parse(text);
    c.conv_channels = j.at("conv_channels").get<std::vector<int>>();
    c.conv_strides = j.at("conv_strides").get<std::vector<int>>();
    c.fc_units = j.at("fc_units").get<int>();
    c.injection_layer = j.at("injection_layer").get<int>();
    c.use_latent = j.at("use_latent").get<bool>();
    const auto branch = j.at("latent_branch").get<std::string>();
    c.latent_branch = branch.empty() ? std::vector<Task>{} : assessor::parse_tasks(branch);
    c.latent_dim = j.at("latent_dim").get<int>();
    c.init = assessor::parse_init(j.at("init").get<std::string>());
    c.stft.n_fft = j.at("n_fft").get<int>();
    c.stft.win_length = j.at("win_length").get<int>();
    c.stft.hop = j.at("hop").get<int>();
    c.stft.window = j.at("window").get<std::string>() == "hann" ? features::WindowKind::Hann : features::WindowKind::Hamming;
  } catch (const json::exception& ex) {
    throw UsageError("enhancer config json: " + std::string(ex.what()));
  }
  validate(c);
  return c;
}

Matrix align_latent(const Matrix& latent, int frames) {
  if (latent.rows() < 1) throw UsageError("latent has no frames");
  if (frames < 1) throw UsageError("cannot align a latent to zero frames");
  if (latent.rows() == frames) return latent;
  Matrix out(frames, latent.cols());
  const double ratio = static_cast<double>(latent.rows()) / frames;
  for (int i = 0; i < frames; ++i) {
    auto src = static_cast<Eigen::Index>(std::floor((i + 0.5) * ratio));
    out.row(i) = latent.row(std::min(src, latent.rows() - 1));
  }
  return out;
}

Enhancer::Enhancer(EnhancerConfig config, std::uint64_t seed) : config_(std::move(config)), seed_(seed) {
  validate(config_);
  const int bins = config_.stft.bins();
  nn::MapShape shape{1, 1, bins};
  int in = 1;
  int layer = 0;
  for (int ch : config_.conv_channels) {
    for (int stride : config_.conv_strides) {
      nn::Conv2dSpec spec;
      spec.stride_f = stride;
      const std::string name = "conv." + std::to_string(layer);
      convs_.emplace_back(params_, name, in, ch, spec, config_.init, seed);
      if (layer == config_.injection_layer && config_.use_latent) {
        latent_conv_ = nn::Conv2d(params_, name + ".latent", config_.latent_width(), ch, spec, config_.init, seed, false);
      }
      nn::Conv2dSpec probe = spec;
      probe.kernel_t = 1;
      probe.pad_t = 0;
      shape = nn::conv2d_output_shape(shape, ch, probe);
      in = ch;
      ++layer;
    }
  }
  trunk_freq_ = shape.freq;
  fc_ = nn::Linear(params_, "fc", config_.conv_channels.back() * trunk_freq_, config_.fc_units, config_.init, seed);
  out_ = nn::Linear(params_, "out", config_.fc_units, bins, nn::InitScheme::LecunUniform, seed);
  mean_ = Matrix::Zero(1, bins);
  inv_std_ = Matrix::Ones(1, bins);
}

int Enhancer::injection_width() const {
  return convs_[static_cast<std::size_t>(config_.injection_layer)].in_channels() + config_.latent_width();
}

Tensor Enhancer::forward(const Matrix& noisy_lps, const Matrix* latent) const {
  const int bins = config_.stft.bins();
  if (noisy_lps.cols() != bins) {
    throw UsageError("enhancer input has " + std::to_string(noisy_lps.cols()) + " bins, expected " + std::to_string(bins));
  }
  if (noisy_lps.rows() < 1) throw UsageError("enhancer input has no frames");
  if (config_.use_latent != (latent != nullptr)) {
    throw UsageError(config_.use_latent ? "enhancer expects a latent code" : "enhancer was built without latent input");
  }
  const auto frames = static_cast<int>(noisy_lps.rows());
  Matrix a;
  if (latent) {
    if (latent->cols() != config_.latent_width()) {
      throw UsageError("latent has width " + std::to_string(latent->cols()) + ", enhancer expects " +
                       std::to_string(config_.latent_width()));
    }
    a = align_latent(*latent, frames);
    if (a.rows() != frames || !a.allFinite()) throw UsageError("latent does not align with the enhancer frames");
  }

  const Matrix x0 = ((noisy_lps.rowwise() - mean_.row(0)).array().rowwise() * inv_std_.row(0).array()).matrix();
  nn::MapShape shape{1, frames, bins};
  Tensor x = nn::reshape(Tensor(x0), 1, static_cast<Eigen::Index>(frames) * bins);
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    nn::MapShape next;
    Tensor y = convs_[i](x, shape, &next);
    if (latent && static_cast<int>(i) == config_.injection_layer) {
      const Tensor lat = nn::broadcast_over_freq(Tensor(a), shape.freq);
      const nn::MapShape lat_shape{config_.latent_width(), frames, shape.freq};
      y = nn::add(y, latent_conv_(lat, lat_shape, nullptr));
    }
    x = nn::relu(y);
    shape = next;
  }
  const Tensor h = nn::relu(fc_(nn::channels_to_frames(x, shape)));
  // Predicted in standardized units, mapped back to LPS.
  Matrix sd(1, bins), mu = mean_;
  for (int j = 0; j < bins; ++j) sd(0, j) = 1.0 / inv_std_(0, j);
  return nn::add_row(nn::mul(out_(h), Tensor(Matrix(sd.replicate(frames, 1)))), Tensor(mu));
}

Matrix Enhancer::enhance(const Matrix& noisy_lps, const Matrix* latent) const {
  nn::NoGradGuard guard;
  return forward(noisy_lps, latent).value();
}

void Enhancer::fit_normalization(const std::vector<const Matrix*>& noisy_lps) {
  if (noisy_lps.empty()) throw UsageError("fit_normalization: no inputs");
  const int bins = config_.stft.bins();
  RowVector sum = RowVector::Zero(bins), sq = RowVector::Zero(bins);
  double n = 0.0;
  for (const Matrix* m : noisy_lps) {
    if (m->cols() != bins) throw UsageError("fit_normalization: wrong bin count");
    sum += m->colwise().sum();
    sq += m->array().square().matrix().colwise().sum();
    n += static_cast<double>(m->rows());
  }
  mean_ = sum / n;
  for (int j = 0; j < bins; ++j) {
    const double sd = std::sqrt(std::max(0.0, sq(j) / n - mean_(0, j) * mean_(0, j)));
    inv_std_(0, j) = sd > 1e-8 ? 1.0 / sd : 1.0;
  }
}

nn::NamedMatrices Enhancer::state() const {
  nn::NamedMatrices out;
  for (const auto& [name, t] : params_.items()) out.emplace_back(name, t.value());
  out.emplace_back("norm.mean", mean_);
  out.emplace_back("norm.inv_std", inv_std_);
  return out;
}

void Enhancer::load_state(const nn::NamedMatrices& entries, bool strict) {
  std::map<std::string, const Matrix*> by_name;
  for (const auto& [name, m] : entries) by_name[name] = &m;
  auto take = [&](const std::string& name, Matrix& dst) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      if (strict) throw UsageError("enhancer checkpoint lacks '" + name + "'");
      return;
    }
    if (it->second->rows() != dst.rows() || it->second->cols() != dst.cols()) {
      throw UsageError("enhancer checkpoint entry '" + name + "' has the wrong shape");
    }
    dst = *it->second;
    by_name.erase(it);
  };
  for (const auto& [name, t] : params_.items()) {
    Tensor handle = t;
    take(name, handle.mutable_value());
  }
  take("norm.mean", mean_);
  take("norm.inv_std", inv_std_);
  if (strict && !by_name.empty()) {
    throw UsageError("enhancer checkpoint has entry '" + by_name.begin()->first + "' unknown to the model");
  }
}

}  // namespace mosanet::enhancer
