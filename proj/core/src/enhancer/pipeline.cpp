#include "mosanet/enhancer/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <nlohmann/json.hpp>

#include "mosanet/assessor/checkpoint.hpp"
#include "mosanet/common/csv.hpp"
#include "mosanet/common/error.hpp"
#include "mosanet/common/parallel.hpp"
#include "mosanet/common/rng.hpp"
#include "mosanet/nn/ops.hpp"
#include "mosanet/nn/optim.hpp"

namespace mosanet::enhancer {

using nlohmann::json;
using nn::Tensor;

void check_assessor_compatible(const EnhancerConfig& config, const assessor::Assessor& model) {
  const auto& ac = model.config();
  for (auto s : ac.streams) {
    if (s != features::Stream::PS && s != features::Stream::COMPLEX) {
      throw UsageError("enhancer: the assessor must use STFT features only, found stream " + features::to_string(s));
    }
  }
  const auto& a = ac.features.stft;
  const auto& e = config.stft;
  if (a.n_fft != e.n_fft || a.win_length != e.win_length || a.hop != e.hop || a.window != e.window) {
    throw UsageError("enhancer: assessor and enhancer STFT settings differ");
  }
  for (Task t : config.latent_branch) {
    if (!ac.has_task(t)) throw UsageError("enhancer: assessor has no " + assessor::to_string(t) + " branch");
  }
  if (config.use_latent && model.latent_dim() != config.latent_dim) {
    throw UsageError("enhancer: assessor latent dimension " + std::to_string(model.latent_dim()) +
                     " differs from the configured " + std::to_string(config.latent_dim));
  }
}

Matrix latent_for(const EnhancerConfig& config, const assessor::Assessor* model, const Waveform& noisy,
                  const std::string& utt_id) {
  if (!config.use_latent) return {};
  if (!model) throw UsageError("enhancer: latent input requires an assessor");
  const auto inputs = model->make_extractor().extract(noisy, utt_id);
  return model->extract_latent(inputs, config.latent_branch);
}

std::vector<SeExample> prepare_examples(const std::vector<SePair>& pairs, const EnhancerConfig& config,
                                        const assessor::Assessor* model, int jobs) {
  if (pairs.empty()) throw UsageError("enhancer: no training pairs");
  if (config.use_latent) {
    if (!model) throw UsageError("enhancer: latent input requires an assessor");
    check_assessor_compatible(config, *model);
  }
  std::vector<SeExample> out(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t i) {
    const SePair& p = pairs[i];
    if (p.noisy.size() != p.clean.size()) throw UsageError("pair '" + p.utt_id + "': noisy and clean lengths differ");
    SeExample& e = out[i];
    e.utt_id = p.utt_id;
    e.noisy_lps = features::log_power_spec(features::stft(p.noisy, config.stft)).values;
    e.clean_lps = features::log_power_spec(features::stft(p.clean, config.stft)).values;
    e.latent = latent_for(config, model, p.noisy, p.utt_id);
  });
  return out;
}

void validate(const SeTrainConfig& c) {
  if (!(c.learning_rate > 0.0)) throw UsageError("train_se: learning rate must be positive");
  if (c.epochs < 1) throw UsageError("train_se: epochs must be at least 1");
  if (c.batch_size < 1) throw UsageError("train_se: batch size must be at least 1");
  if (!(c.clip_norm > 0.0)) throw UsageError("train_se: clip norm must be positive");
  nn::make_optimizer(c.optimizer, c.learning_rate);
}

namespace {

const Matrix* latent_ptr(const Enhancer& se, const SeExample& e) {
  return se.config().use_latent ? &e.latent : nullptr;
}

}  // namespace

double lps_mse(const Enhancer& se, const std::vector<SeExample>& data) {
  if (data.empty()) throw UsageError("lps_mse: no examples");
  double sum = 0.0;
  for (const auto& e : data) sum += (se.enhance(e.noisy_lps, latent_ptr(se, e)) - e.clean_lps).array().square().mean();
  return sum / static_cast<double>(data.size());
}

double noisy_lps_mse(const std::vector<SeExample>& data) {
  if (data.empty()) throw UsageError("noisy_lps_mse: no examples");
  double sum = 0.0;
  for (const auto& e : data) sum += (e.noisy_lps - e.clean_lps).array().square().mean();
  return sum / static_cast<double>(data.size());
}

SeTrainResult train_se(Enhancer& se, const assessor::Assessor* frozen, const std::vector<SeExample>& data,
                       const SeTrainConfig& config, const std::function<void(const SeEpoch&)>& on_epoch) {
  validate(config);
  if (data.empty()) throw UsageError("train_se: no examples");
  if (se.config().use_latent && !frozen) throw UsageError("train_se: latent input requires the frozen assessor");
  if (frozen) check_assessor_compatible(se.config(), *frozen);
  const std::uint64_t before = frozen ? frozen->state_hash() : 0;

  std::vector<const Matrix*> inputs;
  for (const auto& e : data) inputs.push_back(&e.noisy_lps);
  se.fit_normalization(inputs);

  const std::vector<Tensor> params = se.parameters().tensors();
  auto optimizer = nn::make_optimizer(config.optimizer, config.learning_rate);
  SeTrainResult result;
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(derive_seed(config.seed, "se.epoch." + std::to_string(epoch)));
    rng.shuffle(order);
    double sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<Tensor> losses;
      for (std::size_t k = start; k < end; ++k) {
        const SeExample& e = data[order[k]];
        const Tensor pred = se.forward(e.noisy_lps, latent_ptr(se, e));
        losses.push_back(nn::mean_all(nn::square(nn::sub(pred, Tensor(e.clean_lps)))));
      }
      Tensor loss = losses.front();
      for (std::size_t k = 1; k < losses.size(); ++k) loss = nn::add(loss, losses[k]);
      loss = nn::scale(loss, 1.0 / static_cast<double>(losses.size()));
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw Error("train_se: non-finite loss at epoch " + std::to_string(epoch) + ", utterance '" +
                    data[order[start]].utt_id + "'");
      }
      sum += value * static_cast<double>(end - start);
      se.parameters().zero_grad();
      loss.backward();
      nn::clip_grad_norm(params, config.clip_norm);
      optimizer->step(params);
    }
    se.parameters().zero_grad();
    SeEpoch rec{epoch, sum / static_cast<double>(order.size()),
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()};
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }

  if (frozen && frozen->state_hash() != before) throw Error("train_se: assessor parameters changed during training");
  return result;
}

Waveform enhance_utterance(const Enhancer& se, const assessor::Assessor* model, const Waveform& noisy,
                           const std::string& utt_id) {
  validate(noisy);
  if (se.config().use_latent) {
    if (!model) throw UsageError("enhance: this enhancer needs its assessor checkpoint");
    check_assessor_compatible(se.config(), *model);
  }
  const auto spec = features::stft(noisy, se.config().stft);
  const Matrix lps = features::log_power_spec(spec).values;
  const Matrix latent = latent_for(se.config(), model, noisy, utt_id);
  const Matrix enhanced = se.enhance(lps, se.config().use_latent ? &latent : nullptr);
  const Matrix mag = (enhanced.array() / 2.0).exp().matrix();
  Waveform out = features::istft(mag, features::phase(spec), se.config().stft, noisy.size());
  out.sample_rate = noisy.sample_rate;
  return out;
}

void save_se_checkpoint(const std::filesystem::path& path, const Enhancer& se, const SeCheckpointMeta& meta) {
  json history = json::array();
  for (const auto& r : meta.history) history.push_back({{"epoch", r.epoch}, {"loss", r.loss}, {"wall_s", r.wall_s}});
  json j{{"kind", "enhancer"},
         {"config", json::parse(to_json(se.config()))},
         {"seed", se.seed()},
         {"epoch", meta.epoch},
         {"optimizer", meta.optimizer},
         {"learning_rate", meta.learning_rate},
         {"parameter_count", se.parameter_count()},
         {"parameter_hash", assessor::hex64(se.state_hash())},
         {"assessor_config_hash", meta.assessor_config_hash},
         {"assessor_parameter_hash", meta.assessor_parameter_hash},
         {"history", history}};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  nn::write_archive(path, se.state());
  write_file_atomic(assessor::sidecar_path(path), j.dump(2) + "\n");
}

LoadedEnhancer load_se_checkpoint(const std::filesystem::path& path) {
  const auto side = assessor::sidecar_path(path);
  if (!std::filesystem::exists(path) || !std::filesystem::exists(side)) {
    throw UsageError("checkpoint " + path.string() + " or its .json sidecar is missing");
  }
  json j;
  try {
    j = json::parse(read_text_file(side));
  } catch (const json::exception& ex) {
    throw UsageError("checkpoint sidecar: " + std::string(ex.what()));
  }
  if (j.value("kind", "") != "enhancer") throw UsageError(path.string() + " is not an enhancer checkpoint");
  LoadedEnhancer out;
  out.model = std::make_unique<Enhancer>(enhancer_config_from_json(j.at("config").dump()), j.at("seed").get<std::uint64_t>());
  out.model->load_state(nn::read_archive(path), true);
  out.meta.epoch = j.value("epoch", 0);
  out.meta.optimizer = j.value("optimizer", "adam");
  out.meta.learning_rate = j.value("learning_rate", 1e-3);
  out.meta.assessor_config_hash = j.value("assessor_config_hash", "");
  out.meta.assessor_parameter_hash = j.value("assessor_parameter_hash", "");
  for (const auto& r : j.value("history", json::array())) {
    out.meta.history.push_back({r.at("epoch").get<int>(), r.at("loss").get<double>(), r.at("wall_s").get<double>()});
  }
  return out;
}

void check_pairing(const LoadedEnhancer& se, const assessor::Assessor* model) {
  if (!se.model->config().use_latent) return;
  if (!model) throw UsageError("enhance: this enhancer needs its assessor checkpoint");
  if (assessor::hex64(assessor::config_hash(model->config())) != se.meta.assessor_config_hash ||
      assessor::hex64(model->state_hash()) != se.meta.assessor_parameter_hash) {
    throw UsageError("enhance: the assessor checkpoint is not the one the enhancer was trained with");
  }
  check_assessor_compatible(se.model->config(), *model);
}

}  // namespace mosanet::enhancer
