#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mosanet/common/rng.hpp"
#include "mosanet/nn/ops.hpp"

namespace mosanet::nn {

/// Ordered set of named trainable tensors.
class ParameterStore {
 public:
  Tensor add(const std::string& name, Matrix init);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  const std::vector<std::pair<std::string, Tensor>>& items() const { return params_; }
  std::vector<Tensor> tensors() const;
  std::size_t element_count() const;
  void zero_grad();

 private:
  std::vector<std::pair<std::string, Tensor>> params_;
  std::map<std::string, std::size_t> index_;
};

enum class InitScheme { HeUniform, LecunUniform, Zeros };

/// Each named tensor gets its own stream derived from (seed, name), so adding
/// a parameter never changes the values of the others.
Matrix init_matrix(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, InitScheme scheme,
                   std::uint64_t seed, const std::string& name);

class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore& store, const std::string& name, int in, int out, InitScheme scheme,
         std::uint64_t seed);
  Tensor operator()(const Tensor& x) const;
  int in_features() const { return static_cast<int>(weight_.rows()); }
  int out_features() const { return static_cast<int>(weight_.cols()); }
  const Tensor& weight() const { return weight_; }
  const Tensor& bias() const { return bias_; }

 private:
  Tensor weight_;  // in x out
  Tensor bias_;    // 1 x out
};

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(ParameterStore& store, const std::string& name, int in_channels, int out_channels,
         const Conv2dSpec& spec, InitScheme scheme, std::uint64_t seed, bool with_bias = true);
  Tensor operator()(const Tensor& x, const MapShape& in, MapShape* out) const;
  int in_channels() const { return in_channels_; }
  int out_channels() const { return out_channels_; }
  const Conv2dSpec& spec() const { return spec_; }

 private:
  Tensor weight_;
  Tensor bias_;
  Conv2dSpec spec_;
  int in_channels_ = 0;
  int out_channels_ = 0;
};

/// Single-layer bidirectional LSTM; output is [forward ; backward] per frame.
class BiLstm {
 public:
  BiLstm() = default;
  BiLstm(ParameterStore& store, const std::string& name, int in, int hidden, std::uint64_t seed);
  Tensor operator()(const Tensor& x) const;  // T x in -> T x 2H
  int hidden() const { return hidden_; }

 private:
  struct Direction {
    Tensor w_ih, w_hh, bias;
  };
  Tensor run(const Direction& d, const Tensor& x, bool reverse) const;
  Direction fw_, bw_;
  int hidden_ = 0;
};

}  // namespace mosanet::nn
