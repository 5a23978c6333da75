#pragma once

#include <span>
#include <vector>

#include "mosanet/nn/tensor.hpp"

namespace mosanet::nn {

// Elementwise and linear algebra.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
/// a (r x c) + row (1 x c) broadcast over rows.
Tensor add_row(const Tensor& a, const Tensor& row);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// Activations.
Tensor relu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope = 0.3);
Tensor elu(const Tensor& a, double alpha = 1.0);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor square(const Tensor& a);
/// log(a + eps)
Tensor log_eps(const Tensor& a, double eps);
Tensor softmax_rows(const Tensor& a);

// Reductions. Sums run sequentially in index order so results do not depend
// on vectorization.
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);
/// Mean over rows: r x c -> 1 x c.
Tensor mean_rows(const Tensor& a);

// Shape manipulation.
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& a, Eigen::Index begin, Eigen::Index count);
Tensor slice_cols(const Tensor& a, Eigen::Index begin, Eigen::Index count);
/// Row-major reinterpretation.
Tensor reshape(const Tensor& a, Eigen::Index rows, Eigen::Index cols);
Tensor gather_rows(const Tensor& a, std::span<const int> index);

/// Geometry of a channel-major feature map stored as C x (T * F).
struct MapShape {
  int channels = 1;
  int time = 0;
  int freq = 0;
};

struct Conv2dSpec {
  int kernel_t = 3, kernel_f = 3;
  int stride_t = 1, stride_f = 1;
  int pad_t = 1, pad_f = 1;
};

MapShape conv2d_output_shape(const MapShape& in, int out_channels, const Conv2dSpec& spec);

/// x: Cin x (T*F); weight: Cout x (Cin*KT*KF); bias: 1 x Cout (may be undefined).
Tensor conv2d(const Tensor& x, const MapShape& in, const Tensor& weight, const Tensor& bias,
              const Conv2dSpec& spec);

/// C x (T*F) -> T x (C*F).
Tensor channels_to_frames(const Tensor& x, const MapShape& shape);
/// T x D -> D x (T*F), repeating each frame's vector at every frequency.
Tensor broadcast_over_freq(const Tensor& frames, int freq);
/// C x (T*F) -> T x C, averaging over frequency.
Tensor freq_mean(const Tensor& x, const MapShape& shape);

/// Mean over frames of `win` samples every `hop` samples: C x N -> C x T.
Tensor frame_mean_pool(const Tensor& x, int win, int hop);

/// Windowed band-pass sinc kernels from per-filter cutoffs in Hz (C x 1 each),
/// Hamming-windowed, scaled so the centre tap is 1: C x taps.
Tensor sinc_kernels(const Tensor& low_hz, const Tensor& high_hz, int taps, double sample_rate);
/// Zero-padded "same" correlation of a constant signal with each kernel row:
/// C x N.
Tensor conv1d_same(const Tensor& kernels, std::span<const double> signal);

}  // namespace mosanet::nn
