#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mosanet/nn/tensor.hpp"

namespace mosanet::nn {

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  /// Applies one update from the gradients currently held by `params`.
  virtual void step(const std::vector<Tensor>& params) = 0;
  virtual std::string name() const = 0;
  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }

 protected:
  explicit Optimizer(double lr) : lr_(lr) {}
  double lr_;
};

class Adam final : public Optimizer {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : Optimizer(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(const std::vector<Tensor>& params) override;
  std::string name() const override { return "adam"; }

 private:
  double beta1_, beta2_, eps_;
  long long t_ = 0;
  std::vector<Matrix> m_, v_;
};

class RmsProp final : public Optimizer {
 public:
  explicit RmsProp(double lr, double rho = 0.9, double eps = 1e-7) : Optimizer(lr), rho_(rho), eps_(eps) {}
  void step(const std::vector<Tensor>& params) override;
  std::string name() const override { return "rmsprop"; }

 private:
  double rho_, eps_;
  std::vector<Matrix> sq_;
};

std::unique_ptr<Optimizer> make_optimizer(const std::string& name, double lr);

/// L2 norm over every gradient in `params`.
double global_grad_norm(const std::vector<Tensor>& params);

/// Rescales gradients so their global norm is at most `max_norm`; returns the
/// norm before clipping.
double clip_grad_norm(const std::vector<Tensor>& params, double max_norm);

}  // namespace mosanet::nn
