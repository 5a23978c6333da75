#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <functional>

#include "mosanet/common/rng.hpp"
#include "mosanet/nn/archive.hpp"
#include "mosanet/nn/layers.hpp"
#include "mosanet/nn/ops.hpp"
#include "mosanet/nn/optim.hpp"

using namespace mosanet;
using namespace mosanet::nn;

namespace {

Matrix random_matrix(int r, int c, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (auto& v : m.reshaped()) v = rng.uniform(-1, 1);
  return m;
}

// Central differences of f() with respect to every entry of `x`.
Matrix numeric_grad(Tensor& x, const std::function<double()>& f) {
  Matrix g(x.rows(), x.cols());
  Matrix& v = x.mutable_value();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double w = v.data()[i];
    v.data()[i] = w + 1e-6;
    const double up = f();
    v.data()[i] = w - 1e-6;
    const double down = f();
    v.data()[i] = w;
    g.data()[i] = (up - down) / 2e-6;
  }
  return g;
}

void expect_grad(Tensor& x, const std::function<Tensor()>& loss) {
  x.zero_grad();
  loss().backward();
  const Matrix analytic = x.grad();
  const Matrix numeric = numeric_grad(x, [&] {
    NoGradGuard g;
    return loss().item();
  });
  EXPECT_LE((analytic - numeric).cwiseAbs().maxCoeff(), 1e-6 * std::max(1.0, numeric.cwiseAbs().maxCoeff()));
}

}  // namespace

TEST(Ops, MatmulSoftmaxGradient) {
  Tensor a = Tensor::parameter(random_matrix(3, 4, 1));
  const Tensor b(random_matrix(4, 5, 2));
  const Tensor c(random_matrix(3, 5, 3));
  expect_grad(a, [&] { return sum_all(mul(softmax_rows(matmul(a, b)), c)); });
}

TEST(Ops, ActivationsGradient) {
  Tensor a = Tensor::parameter(random_matrix(4, 3, 4));
  expect_grad(a, [&] { return sum_all(add(tanh(a), add(sigmoid(a), elu(scale(a, 2.0))))); });
  expect_grad(a, [&] { return mean_all(square(leaky_relu(add_scalar(a, 0.1)))); });
}

TEST(Ops, StridedConvGradient) {
  const MapShape in{2, 4, 9};
  Tensor x = Tensor::parameter(random_matrix(2, 36, 5));
  Tensor w = Tensor::parameter(random_matrix(3, 18, 6));
  Tensor b = Tensor::parameter(random_matrix(1, 3, 7));
  Conv2dSpec spec;
  spec.stride_f = 3;
  const auto out = conv2d_output_shape(in, 3, spec);
  EXPECT_EQ(out.freq, 3);
  EXPECT_EQ(out.time, 4);
  const Tensor probe(random_matrix(3, out.time * out.freq, 8));
  auto loss = [&] { return sum_all(mul(conv2d(x, in, w, b, spec), probe)); };
  expect_grad(x, loss);
  expect_grad(w, loss);
  expect_grad(b, loss);
}

TEST(Ops, ConvMatchesDirectSum) {
  const MapShape in{1, 3, 4};
  const Matrix x = random_matrix(1, 12, 9);
  const Matrix w = random_matrix(1, 9, 10);
  const Conv2dSpec spec;
  NoGradGuard g;
  const Matrix y = conv2d(Tensor(x), in, Tensor(w), Tensor(), spec).value();
  // Output (t=1, f=0): kernel column 0 falls on padding.
  double want = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 1; j < 3; ++j) want += w(0, i * 3 + j) * x(0, i * 4 + j - 1);
  EXPECT_NEAR(y(0, 4), want, 1e-12);
}

TEST(Ops, ShapeHelpers) {
  const Matrix m = random_matrix(2, 6, 11);  // 2 channels, T=2, F=3
  const MapShape s{2, 2, 3};
  NoGradGuard g;
  const Matrix frames = channels_to_frames(Tensor(m), s).value();
  EXPECT_EQ(frames.rows(), 2);
  EXPECT_EQ(frames(1, 3 + 2), m(1, 3 + 2));
  const Matrix fm = freq_mean(Tensor(m), s).value();
  EXPECT_NEAR(fm(0, 1), m.row(1).head(3).mean(), 1e-15);
  const Matrix bc = broadcast_over_freq(Tensor(Matrix(frames.leftCols(2))), 4).value();
  EXPECT_EQ(bc.rows(), 2);
  EXPECT_EQ(bc(1, 1 * 4 + 3), frames(1, 1));
}

TEST(Layers, BiLstmGradientAndShape) {
  ParameterStore store;
  BiLstm lstm(store, "lstm", 3, 4, 1);
  Tensor x = Tensor::parameter(random_matrix(5, 3, 12));
  const Tensor probe(random_matrix(5, 8, 13));
  auto loss = [&] { return sum_all(mul(lstm(x), probe)); };
  EXPECT_EQ(lstm(x).cols(), 8);
  expect_grad(x, loss);
  Tensor w = store.get("lstm.bw.w_hh");
  expect_grad(w, loss);
}

TEST(Layers, InitIsPerName) {
  ParameterStore a, b;
  Linear(a, "x", 3, 2, InitScheme::HeUniform, 5);
  Linear(b, "y", 4, 4, InitScheme::HeUniform, 5);
  Linear(b, "x", 3, 2, InitScheme::HeUniform, 5);
  EXPECT_EQ(a.get("x.weight").value(), b.get("x.weight").value());
  const Matrix he = init_matrix(100, 100, 50, InitScheme::HeUniform, 1, "w");
  EXPECT_LE(he.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 50));
  EXPECT_EQ(init_matrix(2, 2, 2, InitScheme::Zeros, 1, "z"), Matrix::Zero(2, 2));
}

TEST(Optim, AdamMinimizesQuadratic) {
  Tensor w = Tensor::parameter(Matrix::Constant(1, 3, 5.0));
  Adam adam(0.1);
  for (int i = 0; i < 500; ++i) {
    w.zero_grad();
    sum_all(square(add_scalar(w, -1.0))).backward();
    adam.step({w});
  }
  EXPECT_NEAR(w.value()(0, 1), 1.0, 1e-3);
  EXPECT_THROW(make_optimizer("sgd-momentum", 0.1), std::exception);
  EXPECT_EQ(make_optimizer("rmsprop", 0.1)->name(), "rmsprop");
}

TEST(Optim, ClipGradNorm) {
  Tensor a = Tensor::parameter(Matrix::Zero(1, 2));
  Tensor b = Tensor::parameter(Matrix::Zero(1, 1));
  a.node()->accumulate(Matrix::Constant(1, 2, 3.0));
  b.node()->accumulate(Matrix::Constant(1, 1, 4.0));
  EXPECT_NEAR(global_grad_norm({a, b}), std::sqrt(34.0), 1e-12);
  EXPECT_NEAR(clip_grad_norm({a, b}, 1.0), std::sqrt(34.0), 1e-12);
  EXPECT_NEAR(global_grad_norm({a, b}), 1.0, 1e-12);
}

TEST(Archive, WriteReadHash) {
  const NamedMatrices m{{"a", random_matrix(2, 3, 1)}, {"b.weight", random_matrix(1, 1, 2)}};
  const auto path = std::filesystem::temp_directory_path() / "mosanet_archive_test.bin";
  write_archive(path, m);
  const auto back = read_archive(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].first, "a");
  EXPECT_EQ(back[0].second, m[0].second);
  EXPECT_EQ(hash_matrices(back), hash_matrices(m));
  auto changed = m;
  changed[1].second(0, 0) += 1e-15;
  EXPECT_NE(hash_matrices(changed), hash_matrices(m));
}
