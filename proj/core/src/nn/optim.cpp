#include "mosanet/nn/optim.hpp"

#include <cmath>

#include "mosanet/common/error.hpp"

namespace mosanet::nn {

void Adam::step(const std::vector<Tensor>& params) {
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.push_back(Matrix::Zero(p.rows(), p.cols()));
      v_.push_back(Matrix::Zero(p.rows(), p.cols()));
    }
  }
  if (m_.size() != params.size()) throw Error("Adam: parameter list changed between steps");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor p = params[i];
    if (!p.has_grad()) continue;
    const Matrix& g = p.node()->grad;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
    p.mutable_value().array() -=
        lr_ * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + eps_);
  }
}

void RmsProp::step(const std::vector<Tensor>& params) {
  if (sq_.empty()) {
    for (const auto& p : params) sq_.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
  if (sq_.size() != params.size()) throw Error("RMSprop: parameter list changed between steps");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor p = params[i];
    if (!p.has_grad()) continue;
    const Matrix& g = p.node()->grad;
    sq_[i] = rho_ * sq_[i] + (1.0 - rho_) * g.cwiseProduct(g);
    p.mutable_value().array() -= lr_ * g.array() / (sq_[i].array().sqrt() + eps_);
  }
}

std::unique_ptr<Optimizer> make_optimizer(const std::string& name, double lr) {
  if (!(lr > 0.0)) throw UsageError("learning rate must be positive");
  if (name == "adam" || name == "Adam") return std::make_unique<Adam>(lr);
  if (name == "rmsprop" || name == "RMSprop") return std::make_unique<RmsProp>(lr);
  throw UsageError("unknown optimizer '" + name + "'");
}

double global_grad_norm(const std::vector<Tensor>& params) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (p.has_grad()) sq += p.node()->grad.squaredNorm();
  }
  return std::sqrt(sq);
}

double clip_grad_norm(const std::vector<Tensor>& params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (const auto& p : params) {
      if (p.has_grad()) p.node()->grad *= s;
    }
  }
  return norm;
}

}  // namespace mosanet::nn
