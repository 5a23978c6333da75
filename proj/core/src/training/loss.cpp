#include "mosanet/training/loss.hpp"

#include <cmath>

#include "mosanet/common/error.hpp"
#include "mosanet/nn/ops.hpp"

namespace mosanet::training {

double LossWeights::gamma(Task t) const {
  switch (t) {
    case Task::Q: return gamma_q;
    case Task::I: return gamma_i;
    case Task::D: return gamma_d;
  }
  return 0.0;
}

double LossWeights::alpha(Task t) const {
  switch (t) {
    case Task::Q: return alpha_q;
    case Task::I: return alpha_i;
    case Task::D: return alpha_d;
  }
  return 0.0;
}

void validate(const LossWeights& w) {
  for (double v : {w.gamma_q, w.gamma_i, w.gamma_d, w.alpha_q, w.alpha_i, w.alpha_d}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw UsageError("loss weights must be finite and non-negative");
  }
}

namespace {

std::string name_of(const std::vector<std::string>& ids, std::size_t n) {
  return n < ids.size() ? ids[n] : "#" + std::to_string(n);
}

double truth_of(const Truth& truth, Task t, const std::vector<std::string>& ids, std::size_t n) {
  auto it = truth.find(t);
  if (it == truth.end()) {
    throw UsageError("utterance '" + name_of(ids, n) + "' has no ground truth for task " + assessor::to_string(t));
  }
  return it->second;
}

}  // namespace

LossValue multitask_loss(const std::vector<assessor::AssessmentResult>& results, const std::vector<Truth>& truths,
                         const LossWeights& weights, const std::vector<std::string>& ids) {
  validate(weights);
  if (results.empty() || results.size() != truths.size()) throw UsageError("multitask_loss: batch size mismatch");
  LossValue out;
  const auto N = static_cast<double>(results.size());
  for (const auto& [task, unused] : results.front().tasks) {
    const double alpha = weights.alpha(task);
    double sum = 0.0;
    for (std::size_t n = 0; n < results.size(); ++n) {
      const double y = truth_of(truths[n], task, ids, n);
      const assessor::TaskResult& r = results[n].at(task);
      const double du = y - r.utterance_score;
      double frames = 0.0;
      for (double q : r.frame_scores) frames += (y - q) * (y - q);
      sum += du * du + alpha / static_cast<double>(r.frame_scores.size()) * frames;
    }
    out.per_task[task] = sum / N;
    out.total += weights.gamma(task) * out.per_task[task];
  }
  return out;
}

LossTensor multitask_loss(const std::vector<const assessor::ForwardOutput*>& outputs, const std::vector<Truth>& truths,
                          const LossWeights& weights, const std::vector<std::string>& ids) {
  validate(weights);
  if (outputs.empty() || outputs.size() != truths.size()) throw UsageError("multitask_loss: batch size mismatch");
  LossTensor out;
  const auto N = static_cast<double>(outputs.size());
  std::vector<nn::Tensor> weighted;
  for (const auto& [task, unused] : outputs.front()->tasks) {
    const double alpha = weights.alpha(task);
    std::vector<nn::Tensor> terms;
    for (std::size_t n = 0; n < outputs.size(); ++n) {
      const double y = truth_of(truths[n], task, ids, n);
      auto it = outputs[n]->tasks.find(task);
      if (it == outputs[n]->tasks.end()) throw UsageError("multitask_loss: output lacks a task");
      const assessor::TaskOutput& o = it->second;
      const nn::Tensor utt = nn::square(nn::add_scalar(o.utterance, -y));
      const double L = static_cast<double>(o.frames.rows());
      const nn::Tensor fr = nn::scale(nn::sum_all(nn::square(nn::add_scalar(o.frames, -y))), alpha / L);
      terms.push_back(nn::add(utt, fr));
    }
    nn::Tensor acc = terms.front();
    for (std::size_t i = 1; i < terms.size(); ++i) acc = nn::add(acc, terms[i]);
    const nn::Tensor task_loss = nn::scale(acc, 1.0 / N);
    out.per_task[task] = task_loss;
    weighted.push_back(nn::scale(task_loss, weights.gamma(task)));
  }
  out.total = weighted.front();
  for (std::size_t i = 1; i < weighted.size(); ++i) out.total = nn::add(out.total, weighted[i]);
  return out;
}

}  // namespace mosanet::training
