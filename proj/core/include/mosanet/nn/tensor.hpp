#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "mosanet/common/matrix.hpp"

namespace mosanet::nn {

using mosanet::Matrix;

struct Node {
  Matrix value;
  Matrix grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  /// grad += g, allocating on first use.
  void accumulate(const Matrix& g);
  template <typename Expr>
  void accumulate_expr(const Expr& g) {
    if (grad.size() == 0) {
      grad = g;
    } else {
      grad += g;
    }
  }
  Matrix& grad_buffer();  // zero-initialized on first use
};

/// Handle to a node of a reverse-mode autodiff graph over dense row-major
/// double matrices. Copies share the node.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Matrix value, bool requires_grad = false);
  /// Trainable leaf.
  static Tensor parameter(Matrix value) { return Tensor(std::move(value), true); }
  static Tensor scalar(double v);

  bool defined() const { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  /// Zero matrix of the value's shape when no gradient has arrived.
  Matrix grad() const;
  bool has_grad() const { return node_ && node_->grad.size() != 0; }
  void zero_grad();
  bool requires_grad() const { return node_ && node_->requires_grad; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  double item() const;

  /// Back-propagates from a 1x1 tensor; gradients accumulate into every
  /// reachable node that requires them.
  void backward() const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  friend Tensor make_result(Matrix value, std::vector<Tensor> parents,
                            std::function<void(Node&)> backward);
  std::shared_ptr<Node> node_;
};

/// Builds an op result. When gradient recording is off or no parent needs a
/// gradient, the result is a plain constant and `backward` is dropped.
Tensor make_result(Matrix value, std::vector<Tensor> parents, std::function<void(Node&)> backward);

bool grad_enabled();

/// Disables graph recording in the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace mosanet::nn
