#include "mosanet/nn/layers.hpp"

#include <cmath>

#include "mosanet/common/error.hpp"

namespace mosanet::nn {

Tensor ParameterStore::add(const std::string& name, Matrix init) {
  if (index_.count(name)) throw Error("duplicate parameter name '" + name + "'");
  index_[name] = params_.size();
  params_.emplace_back(name, Tensor::parameter(std::move(init)));
  return params_.back().second;
}

const Tensor& ParameterStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("no parameter named '" + name + "'");
  return params_[it->second].second;
}

std::vector<Tensor> ParameterStore::tensors() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& [name, t] : params_) out.push_back(t);
  return out;
}

std::size_t ParameterStore::element_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_) n += static_cast<std::size_t>(t.value().size());
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& [name, t] : params_) t.zero_grad();
}

Matrix init_matrix(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, InitScheme scheme,
                   std::uint64_t seed, const std::string& name) {
  if (scheme == InitScheme::Zeros) return Matrix::Zero(rows, cols);
  const double fi = static_cast<double>(std::max<Eigen::Index>(fan_in, 1));
  const double bound = scheme == InitScheme::HeUniform ? std::sqrt(6.0 / fi) : std::sqrt(3.0 / fi);
  Rng rng(derive_seed(seed, name));
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
  return m;
}

Linear::Linear(ParameterStore& store, const std::string& name, int in, int out, InitScheme scheme,
               std::uint64_t seed) {
  weight_ = store.add(name + ".weight", init_matrix(in, out, in, scheme, seed, name + ".weight"));
  bias_ = store.add(name + ".bias", Matrix::Zero(1, out));
}

Tensor Linear::operator()(const Tensor& x) const { return add_row(matmul(x, weight_), bias_); }

Conv2d::Conv2d(ParameterStore& store, const std::string& name, int in_channels, int out_channels,
               const Conv2dSpec& spec, InitScheme scheme, std::uint64_t seed, bool with_bias)
    : spec_(spec), in_channels_(in_channels), out_channels_(out_channels) {
  const Eigen::Index fan_in = static_cast<Eigen::Index>(in_channels) * spec.kernel_t * spec.kernel_f;
  weight_ = store.add(name + ".weight", init_matrix(out_channels, fan_in, fan_in, scheme, seed, name + ".weight"));
  if (with_bias) bias_ = store.add(name + ".bias", Matrix::Zero(1, out_channels));
}

Tensor Conv2d::operator()(const Tensor& x, const MapShape& in, MapShape* out) const {
  if (in.channels != in_channels_) throw Error("conv2d layer: channel mismatch");
  if (out) *out = conv2d_output_shape(in, out_channels_, spec_);
  return conv2d(x, in, weight_, bias_, spec_);
}

BiLstm::BiLstm(ParameterStore& store, const std::string& name, int in, int hidden, std::uint64_t seed)
    : hidden_(hidden) {
  auto make = [&](const std::string& dir) {
    Direction d;
    const std::string p = name + "." + dir;
    d.w_ih = store.add(p + ".w_ih", init_matrix(in, 4 * hidden, in, InitScheme::LecunUniform, seed, p + ".w_ih"));
    d.w_hh = store.add(p + ".w_hh",
                       init_matrix(hidden, 4 * hidden, hidden, InitScheme::LecunUniform, seed, p + ".w_hh"));
    Matrix b = Matrix::Zero(1, 4 * hidden);
    b.middleCols(hidden, hidden).setOnes();  // forget gate starts open
    d.bias = store.add(p + ".bias", std::move(b));
    return d;
  };
  fw_ = make("fw");
  bw_ = make("bw");
}

Tensor BiLstm::run(const Direction& d, const Tensor& x, bool reverse) const {
  const Eigen::Index T = x.rows();
  const Eigen::Index H = hidden_;
  const Tensor projected = add_row(matmul(x, d.w_ih), d.bias);
  Tensor h(Matrix::Zero(1, H));
  Tensor c(Matrix::Zero(1, H));
  std::vector<Tensor> outputs(static_cast<std::size_t>(T));
  for (Eigen::Index step = 0; step < T; ++step) {
    const Eigen::Index t = reverse ? T - 1 - step : step;
    Tensor gates = add(slice_rows(projected, t, 1), matmul(h, d.w_hh));
    Tensor i = sigmoid(slice_cols(gates, 0, H));
    Tensor f = sigmoid(slice_cols(gates, H, H));
    Tensor g = tanh(slice_cols(gates, 2 * H, H));
    Tensor o = sigmoid(slice_cols(gates, 3 * H, H));
    c = add(mul(f, c), mul(i, g));
    h = mul(o, tanh(c));
    outputs[static_cast<std::size_t>(t)] = h;
  }
  return concat_rows(outputs);
}

Tensor BiLstm::operator()(const Tensor& x) const {
  if (x.rows() < 1) throw Error("BiLstm: empty sequence");
  return concat_cols({run(fw_, x, false), run(bw_, x, true)});
}

}  // namespace mosanet::nn
