#include "mosanet/training/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include "mosanet/common/csv.hpp"
#include "mosanet/common/error.hpp"
#include "mosanet/common/parallel.hpp"
#include "mosanet/common/rng.hpp"
#include "mosanet/corpus/wav.hpp"
#include "mosanet/evalstats/stats.hpp"
#include "mosanet/nn/optim.hpp"

namespace mosanet::training {

using assessor::Assessor;
using assessor::EpochRecord;

void validate(const TrainConfig& c) {
  if (!(c.learning_rate > 0.0)) throw UsageError("train: learning rate must be positive");
  if (c.batch_size < 1) throw UsageError("train: batch size must be at least 1");
  if (c.epochs < 1) throw UsageError("train: epochs must be at least 1");
  if (c.early_stop_patience < 1) throw UsageError("train: patience must be at least 1");
  if (!(c.heldout_fraction >= 0.0 && c.heldout_fraction < 1.0)) throw UsageError("train: held-out fraction must be in [0, 1)");
  if (!(c.clip_norm > 0.0)) throw UsageError("train: clip norm must be positive");
  nn::make_optimizer(c.optimizer, c.learning_rate);
}

std::vector<LabeledUtterance> prepare_dataset(const corpus::Manifest& manifest, const Assessor& model, int jobs) {
  if (manifest.empty()) throw UsageError("prepare_dataset: empty manifest");
  const auto& cfg = model.config();
  for (const auto& e : manifest) {
    for (Task t : cfg.tasks) {
      if (!e.scores.get(cfg.targets.at(t))) {
        throw UsageError("entry '" + e.utt_id + "' has no '" + cfg.targets.at(t) + "' score for task " +
                         assessor::to_string(t));
      }
    }
  }
  const features::FeatureExtractor extractor = model.make_extractor();
  std::vector<LabeledUtterance> out(manifest.size());
  parallel_for(manifest.size(), jobs, [&](std::size_t i) {
    const auto& e = manifest[i];
    try {
      out[i].inputs = extractor.extract(corpus::load_waveform(e.degraded_path), e.utt_id);
    } catch (const UsageError& ex) {
      throw UsageError("entry '" + e.utt_id + "': " + ex.what());
    }
    for (Task t : cfg.tasks) out[i].truth[t] = *e.scores.get(cfg.targets.at(t));
  });
  return out;
}

namespace {

std::vector<nn::Tensor> updatable(const Assessor& model, const std::vector<std::string>& frozen) {
  std::vector<nn::Tensor> out;
  for (const auto& [name, t] : model.parameters().items()) {
    const bool skip = std::any_of(frozen.begin(), frozen.end(),
                                  [&](const std::string& p) { return name.rfind(p, 0) == 0; });
    if (!skip) out.push_back(t);
  }
  return out;
}

double evaluate_loss(const Assessor& model, const std::vector<LabeledUtterance>& data,
                     const std::vector<std::size_t>& idx, const LossWeights& weights) {
  std::vector<assessor::AssessmentResult> results;
  std::vector<Truth> truths;
  std::vector<std::string> ids;
  for (std::size_t i : idx) {
    results.push_back(model.assess(data[i].inputs));
    truths.push_back(data[i].truth);
    ids.push_back(data[i].inputs.utt_id);
  }
  return multitask_loss(results, truths, weights, ids).total;
}

}  // namespace

TrainResult train(Assessor& model, const std::vector<LabeledUtterance>& data, const TrainConfig& config,
                  const LossWeights& weights, const EpochCallback& on_epoch) {
  validate(config);
  validate(weights);
  if (data.empty()) throw UsageError("train: no training utterances");

  std::vector<std::size_t> all(data.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::vector<std::size_t> heldout, fit;
  if (config.heldout_fraction > 0.0 && data.size() >= 2) {
    Rng split_rng(derive_seed(config.seed, "heldout"));
    std::vector<std::size_t> shuffled = all;
    split_rng.shuffle(shuffled);
    auto n_held = static_cast<std::size_t>(std::floor(config.heldout_fraction * static_cast<double>(data.size())));
    n_held = std::clamp<std::size_t>(n_held, 1, data.size() - 1);
    heldout.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_held));
    fit.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_held), shuffled.end());
    std::sort(heldout.begin(), heldout.end());
    std::sort(fit.begin(), fit.end());
  } else {
    fit = all;
  }

  const std::vector<nn::Tensor> params = updatable(model, config.frozen_prefixes);
  auto optimizer = nn::make_optimizer(config.optimizer, config.learning_rate);

  TrainResult result;
  double best = INFINITY;
  nn::NamedMatrices best_state = model.state();
  int since_best = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::size_t> order = fit;
    Rng rng(derive_seed(config.seed, "epoch." + std::to_string(epoch)));
    rng.shuffle(order);

    EpochRecord rec;
    rec.epoch = epoch;
    std::map<Task, double> task_sums;
    double total_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<assessor::ForwardOutput> outputs;
      outputs.reserve(end - start);
      std::vector<Truth> truths;
      std::vector<std::string> ids;
      for (std::size_t k = start; k < end; ++k) {
        outputs.push_back(model.forward(data[order[k]].inputs));
        truths.push_back(data[order[k]].truth);
        ids.push_back(data[order[k]].inputs.utt_id);
      }
      std::vector<const assessor::ForwardOutput*> ptrs;
      for (const auto& o : outputs) ptrs.push_back(&o);
      const LossTensor loss = multitask_loss(ptrs, truths, weights, ids);
      const double value = loss.total.item();
      if (!std::isfinite(value)) {
        throw Error("non-finite loss at epoch " + std::to_string(epoch) + ", utterance '" + ids.front() + "'");
      }
      const auto count = static_cast<double>(end - start);
      total_sum += value * count;
      for (const auto& [task, t] : loss.per_task) task_sums[task] += t.item() * count;

      model.parameters().zero_grad();
      loss.total.backward();
      const double norm = nn::clip_grad_norm(params, config.clip_norm);
      if (!std::isfinite(norm)) {
        throw Error("non-finite gradient at epoch " + std::to_string(epoch) + ", utterance '" + ids.front() + "'");
      }
      rec.max_grad_norm = std::max(rec.max_grad_norm, norm);
      if (norm > config.clip_norm) ++rec.clipped_steps;
      optimizer->step(params);
      model.after_update();
    }
    model.parameters().zero_grad();

    const auto n_fit = static_cast<double>(order.size());
    rec.total_loss = total_sum / n_fit;
    for (const auto& [task, s] : task_sums) rec.task_loss[assessor::to_string(task)] = s / n_fit;
    rec.heldout_loss = heldout.empty() ? rec.total_loss : evaluate_loss(model, data, heldout, weights);
    if (!std::isfinite(rec.heldout_loss)) throw Error("non-finite held-out loss at epoch " + std::to_string(epoch));
    rec.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.push_back(rec);
    result.epochs_run = epoch;
    if (on_epoch) on_epoch(rec);

    if (rec.heldout_loss < best) {
      best = rec.heldout_loss;
      if (!heldout.empty()) best_state = model.state();
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.early_stop_patience) {
      result.stopped_early = true;
      break;
    }
  }
  // Without held-out data the running loss is too noisy to pick a checkpoint; keep the final weights.
  if (!heldout.empty()) model.load_state(best_state, true);
  return result;
}

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history,
                       const std::vector<Task>& tasks) {
  std::vector<std::string> header{"epoch", "total_loss"};
  for (Task t : tasks) header.push_back("loss_" + assessor::to_string(t));
  for (const char* h : {"heldout_loss", "max_grad_norm", "clipped_steps"}) header.push_back(h);
  CsvWriter csv(header);
  for (const auto& r : history) {
    std::vector<std::string> row{std::to_string(r.epoch), format_double(r.total_loss)};
    for (Task t : tasks) {
      auto it = r.task_loss.find(assessor::to_string(t));
      row.push_back(it == r.task_loss.end() ? "" : format_double(it->second));
    }
    row.push_back(format_double(r.heldout_loss));
    row.push_back(format_double(r.max_grad_norm));
    row.push_back(std::to_string(r.clipped_steps));
    csv.add_row(std::move(row));
  }
  csv.write(path);
}

std::unique_ptr<Assessor> make_adapted_model(const Assessor& pretrained, const AdaptConfig& config) {
  const auto& pc = pretrained.config();
  if (!pc.has_task(Task::Q) || !pc.has_task(Task::I)) {
    throw UsageError("adapt: the pre-trained model must include the Q and I branches");
  }
  assessor::AssessorConfig c = pc;
  c.tasks = {Task::Q, Task::I};
  c.targets = {{Task::Q, config.quality_target}, {Task::I, config.intelligibility_target}};
  auto model = std::make_unique<Assessor>(c, config.train.seed);
  if (config.warm_start) {
    model->load_state(pretrained.state(), false);
  } else {
    // Scratch training still needs input statistics; they are not learned.
    nn::NamedMatrices buffers;
    for (const auto& [name, m] : pretrained.state()) {
      if (name.rfind("norm.", 0) == 0) buffers.emplace_back(name, m);
    }
    model->load_state(buffers, false);
  }
  return model;
}

AdaptResult adapt(const assessor::LoadedAssessor& pretrained, const corpus::Manifest& subjective,
                  const AdaptConfig& config, const LossWeights& weights, int jobs, const EpochCallback& on_epoch) {
  if (subjective.empty()) throw UsageError("adapt: empty subjective manifest");
  for (const auto& e : subjective) {
    if (!e.scores.get(config.quality_target) || !e.scores.get(config.intelligibility_target)) {
      throw UsageError("adapt: entry '" + e.utt_id + "' lacks subjective labels '" + config.quality_target +
                       "' and '" + config.intelligibility_target + "'");
    }
  }
  AdaptResult out;
  out.model = make_adapted_model(*pretrained.model, config);
  TrainConfig tc = config.train;
  if (!config.learning_rate_set) tc.learning_rate = pretrained.meta.learning_rate / 2.0;
  if (config.freeze_ssl_projection) tc.frozen_prefixes.push_back("proj.SSL.");
  out.learning_rate = tc.learning_rate;
  const auto data = prepare_dataset(subjective, *out.model, jobs);
  out.train = train(*out.model, data, tc, weights, on_epoch);
  return out;
}

EvalReport evaluate_model(const Assessor& model, const corpus::Manifest& manifest, const std::string& model_name,
                          int jobs) {
  EvalReport report;
  const auto& cfg = model.config();
  const features::FeatureExtractor extractor = model.make_extractor();

  for (corpus::Split split : {corpus::Split::Train, corpus::Split::TestSeen, corpus::Split::TestUnseen}) {
    // Group entries by degraded file so per-rater labels are averaged.
    std::vector<std::string> keys;
    std::map<std::string, std::vector<const corpus::ManifestEntry*>> groups;
    for (const auto& e : manifest) {
      if (e.split != split) continue;
      const std::string key = e.degraded_path.string();
      if (!groups.count(key)) keys.push_back(key);
      groups[key].push_back(&e);
    }
    const std::string split_name = corpus::to_string(split);
    if (keys.empty()) {
      report.warnings.push_back("split " + split_name + " is empty; skipped");
      continue;
    }
    std::vector<assessor::AssessmentResult> results(keys.size());
    parallel_for(keys.size(), jobs, [&](std::size_t i) {
      const auto* first = groups[keys[i]].front();
      results[i] = model.assess(extractor.extract(corpus::load_waveform(first->degraded_path), first->utt_id));
    });
    for (Task t : cfg.tasks) {
      const std::string target = cfg.targets.at(t);
      EvalPrediction pred;
      pred.split = split_name;
      pred.task = assessor::to_string(t);
      for (std::size_t i = 0; i < keys.size(); ++i) {
        double sum = 0.0;
        int n = 0;
        for (const auto* e : groups[keys[i]]) {
          if (auto v = e->scores.get(target)) {
            sum += *v;
            ++n;
          }
        }
        if (n == 0) continue;
        pred.ids.push_back(groups[keys[i]].front()->utt_id);
        pred.predicted.push_back(results[i].at(t).utterance_score);
        pred.truth.push_back(sum / n);
      }
      if (pred.ids.empty()) {
        report.warnings.push_back("split " + split_name + " has no '" + target + "' labels; skipped");
        continue;
      }
      EvalRow row;
      row.model = model_name;
      row.split = split_name;
      row.task = pred.task;
      row.target = target;
      row.n = pred.ids.size();
      row.mse = evalstats::mse(pred.predicted, pred.truth);
      try {
        row.lcc = evalstats::lcc(pred.predicted, pred.truth);
        row.srcc = evalstats::srcc(pred.predicted, pred.truth);
      } catch (const UsageError&) {
        row.status = "degenerate";
      }
      report.rows.push_back(row);
      report.predictions.push_back(std::move(pred));
    }
  }
  return report;
}

void write_results_csv(const std::filesystem::path& path, const std::vector<EvalRow>& rows) {
  CsvWriter csv({"model", "split", "task", "target", "n", "LCC", "SRCC", "MSE", "status"});
  for (const auto& r : rows) {
    csv.add_row({r.model, r.split, r.task, r.target, std::to_string(r.n), r.lcc ? format_double(*r.lcc) : "",
                 r.srcc ? format_double(*r.srcc) : "", format_double(r.mse), r.status});
  }
  csv.write(path);
}

}  // namespace mosanet::training
