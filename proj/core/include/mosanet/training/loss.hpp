#pragma once

#include <map>
#include <string>
#include <vector>

#include "mosanet/assessor/model.hpp"

namespace mosanet::training {

using assessor::Task;

/// gamma: per-task weights, alpha: frame-term weights. All default to 1.
struct LossWeights {
  double gamma_q = 1.0, gamma_i = 1.0, gamma_d = 1.0;
  double alpha_q = 1.0, alpha_i = 1.0, alpha_d = 1.0;

  double gamma(Task t) const;
  double alpha(Task t) const;
};

void validate(const LossWeights& w);

/// Utterance-level ground truth per task; frame targets equal it.
using Truth = std::map<Task, double>;

struct LossValue {
  double total = 0.0;
  std::map<Task, double> per_task;
};

/// For each task: mean over utterances of
///   (y - y_hat)^2 + alpha / L * sum_l (y - y_hat_l)^2
/// and the gamma-weighted sum over tasks. `ids` (optional) name utterances
/// in the error for a missing truth.
LossValue multitask_loss(const std::vector<assessor::AssessmentResult>& results, const std::vector<Truth>& truths,
                         const LossWeights& weights, const std::vector<std::string>& ids = {});

struct LossTensor {
  nn::Tensor total;
  std::map<Task, nn::Tensor> per_task;
};

/// Differentiable form over forward outputs.
LossTensor multitask_loss(const std::vector<const assessor::ForwardOutput*>& outputs, const std::vector<Truth>& truths,
                          const LossWeights& weights, const std::vector<std::string>& ids = {});

}  // namespace mosanet::training
