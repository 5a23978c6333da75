#include "mosanet/nn/ops.hpp"

#include <cmath>
#include <string>

#include "mosanet/common/error.hpp"

namespace mosanet::nn {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                std::to_string(b.cols()));
  }
}

Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  return make_result(a.value() + b.value(), {a, b}, [](Node& self) {
    for (std::size_t i = 0; i < 2; ++i) {
      if (parent(self, i).requires_grad) parent(self, i).accumulate(self.grad);
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  return make_result(a.value() - b.value(), {a, b}, [](Node& self) {
    if (parent(self, 0).requires_grad) parent(self, 0).accumulate(self.grad);
    if (parent(self, 1).requires_grad) parent(self, 1).accumulate_expr(-self.grad);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  return make_result(a.value().cwiseProduct(b.value()), {a, b}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pa.requires_grad) pa.accumulate_expr(self.grad.cwiseProduct(pb.value));
    if (pb.requires_grad) pb.accumulate_expr(self.grad.cwiseProduct(pa.value));
  });
}

Tensor scale(const Tensor& a, double s) {
  return make_result(a.value() * s, {a}, [s](Node& self) { parent(self, 0).accumulate_expr(self.grad * s); });
}

Tensor add_scalar(const Tensor& a, double s) {
  return make_result(a.value().array() + s, {a}, [](Node& self) { parent(self, 0).accumulate(self.grad); });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw Error("add_row: bias shape mismatch");
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  return make_result(std::move(out), {a, row}, [](Node& self) {
    if (parent(self, 0).requires_grad) parent(self, 0).accumulate(self.grad);
    if (parent(self, 1).requires_grad) parent(self, 1).accumulate_expr(self.grad.colwise().sum());
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw Error("matmul: inner dimensions " + std::to_string(a.cols()) + " and " + std::to_string(b.rows()));
  }
  Matrix out = a.value() * b.value();
  return make_result(std::move(out), {a, b}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pa.requires_grad) pa.grad_buffer().noalias() += self.grad * pb.value.transpose();
    if (pb.requires_grad) pb.grad_buffer().noalias() += pa.value.transpose() * self.grad;
  });
}

Tensor transpose(const Tensor& a) {
  return make_result(a.value().transpose(), {a},
                     [](Node& self) { parent(self, 0).accumulate_expr(self.grad.transpose()); });
}

Tensor relu(const Tensor& a) {
  return make_result(a.value().cwiseMax(0.0), {a}, [](Node& self) {
    Node& p = parent(self, 0);
    p.accumulate_expr((p.value.array() > 0.0).select(self.grad, 0.0).matrix());
  });
}

Tensor leaky_relu(const Tensor& a, double slope) {
  Matrix out = (a.value().array() > 0.0).select(a.value(), a.value() * slope);
  return make_result(std::move(out), {a}, [slope](Node& self) {
    Node& p = parent(self, 0);
    p.accumulate_expr((p.value.array() > 0.0).select(self.grad, self.grad * slope).matrix());
  });
}

Tensor elu(const Tensor& a, double alpha) {
  Matrix out = a.value().unaryExpr([alpha](double x) { return x > 0.0 ? x : alpha * std::expm1(x); });
  return make_result(std::move(out), {a}, [alpha](Node& self) {
    Node& p = parent(self, 0);
    Matrix g = self.grad;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      const double x = p.value.data()[i];
      if (x <= 0.0) g.data()[i] *= self.value.data()[i] + alpha;
    }
    p.accumulate(g);
  });
}

Tensor sigmoid(const Tensor& a) {
  Matrix out = a.value().unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  return make_result(std::move(out), {a}, [](Node& self) {
    parent(self, 0).accumulate_expr(
        self.grad.cwiseProduct(self.value.cwiseProduct((1.0 - self.value.array()).matrix())));
  });
}

Tensor tanh(const Tensor& a) {
  Matrix out = a.value().array().tanh().matrix();
  return make_result(std::move(out), {a}, [](Node& self) {
    parent(self, 0).accumulate_expr(self.grad.cwiseProduct((1.0 - self.value.array().square()).matrix()));
  });
}

Tensor abs(const Tensor& a) {
  return make_result(a.value().cwiseAbs(), {a}, [](Node& self) {
    Node& p = parent(self, 0);
    Matrix g = self.grad;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      const double x = p.value.data()[i];
      g.data()[i] *= (x > 0.0) ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
    }
    p.accumulate(g);
  });
}

Tensor square(const Tensor& a) {
  return make_result(a.value().array().square().matrix(), {a}, [](Node& self) {
    Node& p = parent(self, 0);
    p.accumulate_expr(2.0 * self.grad.cwiseProduct(p.value));
  });
}

Tensor log_eps(const Tensor& a, double eps) {
  Matrix out = (a.value().array() + eps).log().matrix();
  return make_result(std::move(out), {a}, [eps](Node& self) {
    Node& p = parent(self, 0);
    p.accumulate_expr(self.grad.cwiseQuotient((p.value.array() + eps).matrix()));
  });
}

Tensor softmax_rows(const Tensor& a) {
  Matrix out(a.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const double m = a.value().row(r).maxCoeff();
    double z = 0.0;
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      out(r, c) = std::exp(a.value()(r, c) - m);
      z += out(r, c);
    }
    out.row(r) /= z;
  }
  return make_result(std::move(out), {a}, [](Node& self) {
    const Matrix& y = self.value;
    Matrix g(y.rows(), y.cols());
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      const double dot = self.grad.row(r).dot(y.row(r));
      g.row(r) = y.row(r).cwiseProduct((self.grad.row(r).array() - dot).matrix());
    }
    parent(self, 0).accumulate(g);
  });
}

Tensor sum_all(const Tensor& a) {
  double s = 0.0;
  const double* d = a.value().data();
  for (Eigen::Index i = 0; i < a.value().size(); ++i) s += d[i];
  Matrix out(1, 1);
  out(0, 0) = s;
  return make_result(std::move(out), {a}, [](Node& self) {
    Node& p = parent(self, 0);
    p.accumulate_expr(Matrix::Constant(p.value.rows(), p.value.cols(), self.grad(0, 0)));
  });
}

Tensor mean_all(const Tensor& a) {
  const auto n = static_cast<double>(a.value().size());
  double s = 0.0;
  const double* d = a.value().data();
  for (Eigen::Index i = 0; i < a.value().size(); ++i) s += d[i];
  Matrix out(1, 1);
  out(0, 0) = s / n;
  return make_result(std::move(out), {a}, [n](Node& self) {
    Node& p = parent(self, 0);
    p.accumulate_expr(Matrix::Constant(p.value.rows(), p.value.cols(), self.grad(0, 0) / n));
  });
}

Tensor mean_rows(const Tensor& a) {
  const auto n = static_cast<double>(a.rows());
  Matrix out = a.value().colwise().sum() / n;
  return make_result(std::move(out), {a}, [n](Node& self) {
    Node& p = parent(self, 0);
    Matrix g(p.value.rows(), p.value.cols());
    g.rowwise() = self.grad.row(0) / n;
    p.accumulate(g);
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw Error("concat_rows: no inputs");
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts.front().cols();
  for (const auto& p : parts) {
    if (p.cols() != cols) throw Error("concat_rows: column mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return make_result(std::move(out), parts, [](Node& self) {
    Eigen::Index r0 = 0;
    for (auto& pp : self.parents) {
      const Eigen::Index n = pp->value.rows();
      if (pp->requires_grad) pp->accumulate(self.grad.middleRows(r0, n));
      r0 += n;
    }
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw Error("concat_cols: no inputs");
  Eigen::Index cols = 0;
  const Eigen::Index rows = parts.front().rows();
  for (const auto& p : parts) {
    if (p.rows() != rows) throw Error("concat_cols: row mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return make_result(std::move(out), parts, [](Node& self) {
    Eigen::Index c0 = 0;
    for (auto& pp : self.parents) {
      const Eigen::Index n = pp->value.cols();
      if (pp->requires_grad) pp->accumulate(self.grad.middleCols(c0, n));
      c0 += n;
    }
  });
}

Tensor slice_rows(const Tensor& a, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || count < 0 || begin + count > a.rows()) throw Error("slice_rows: out of range");
  return make_result(a.value().middleRows(begin, count), {a}, [begin, count](Node& self) {
    parent(self, 0).grad_buffer().middleRows(begin, count) += self.grad;
  });
}

Tensor slice_cols(const Tensor& a, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || count < 0 || begin + count > a.cols()) throw Error("slice_cols: out of range");
  return make_result(a.value().middleCols(begin, count), {a}, [begin, count](Node& self) {
    parent(self, 0).grad_buffer().middleCols(begin, count) += self.grad;
  });
}

Tensor reshape(const Tensor& a, Eigen::Index rows, Eigen::Index cols) {
  if (rows * cols != a.value().size()) throw Error("reshape: element count mismatch");
  Matrix out = Eigen::Map<const Matrix>(a.value().data(), rows, cols);
  return make_result(std::move(out), {a}, [](Node& self) {
    Node& p = parent(self, 0);
    p.accumulate(Eigen::Map<const Matrix>(self.grad.data(), p.value.rows(), p.value.cols()));
  });
}

Tensor gather_rows(const Tensor& a, std::span<const int> index) {
  Matrix out(static_cast<Eigen::Index>(index.size()), a.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= a.rows()) throw Error("gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = a.value().row(index[i]);
  }
  std::vector<int> idx(index.begin(), index.end());
  return make_result(std::move(out), {a}, [idx = std::move(idx)](Node& self) {
    Matrix& g = parent(self, 0).grad_buffer();
    for (std::size_t i = 0; i < idx.size(); ++i) g.row(idx[i]) += self.grad.row(static_cast<Eigen::Index>(i));
  });
}

}  // namespace mosanet::nn
