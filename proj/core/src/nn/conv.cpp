#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "mosanet/common/error.hpp"
#include "mosanet/nn/ops.hpp"

namespace mosanet::nn {

MapShape conv2d_output_shape(const MapShape& in, int out_channels, const Conv2dSpec& s) {
  MapShape out;
  out.channels = out_channels;
  out.time = (in.time + 2 * s.pad_t - s.kernel_t) / s.stride_t + 1;
  out.freq = (in.freq + 2 * s.pad_f - s.kernel_f) / s.stride_f + 1;
  if (out.time < 1 || out.freq < 1) {
    throw Error("conv2d: input " + std::to_string(in.time) + "x" + std::to_string(in.freq) +
                " too small for the kernel");
  }
  return out;
}

namespace {

// Output positions [lo, hi) whose input index o * stride + offset is inside
// [0, n).
std::pair<int, int> valid_range(int out_n, int stride, int offset, int n) {
  int lo = offset >= 0 ? 0 : (-offset + stride - 1) / stride;
  int hi = n - 1 - offset < 0 ? 0 : (n - 1 - offset) / stride + 1;
  lo = std::min(lo, out_n);
  hi = std::clamp(hi, lo, out_n);
  return {lo, hi};
}

// cols: (Cin*KT*KF) x (To*Fo)
void im2col(const Matrix& x, const MapShape& in, const MapShape& out, const Conv2dSpec& s, Matrix& cols) {
  cols.resize(static_cast<Eigen::Index>(in.channels) * s.kernel_t * s.kernel_f,
               static_cast<Eigen::Index>(out.time) * out.freq);
  for (int c = 0; c < in.channels; ++c) {
    const double* src = x.data() + static_cast<std::ptrdiff_t>(c) * in.time * in.freq;
    for (int i = 0; i < s.kernel_t; ++i) {
      for (int j = 0; j < s.kernel_f; ++j) {
        double* dst = cols.data() + ((static_cast<std::ptrdiff_t>(c) * s.kernel_t + i) * s.kernel_f + j) * cols.cols();
        const auto [flo, fhi] = valid_range(out.freq, s.stride_f, j - s.pad_f, in.freq);
        for (int to = 0; to < out.time; ++to) {
          double* drow = dst + static_cast<std::ptrdiff_t>(to) * out.freq;
          const int ti = to * s.stride_t + i - s.pad_t;
          if (ti < 0 || ti >= in.time) {
            std::fill(drow, drow + out.freq, 0.0);
            continue;
          }
          const double* row = src + static_cast<std::ptrdiff_t>(ti) * in.freq + (j - s.pad_f);
          std::fill(drow, drow + flo, 0.0);
          if (s.stride_f == 1) {
            std::copy(row + flo, row + fhi, drow + flo);
          } else {
            for (int fo = flo; fo < fhi; ++fo) drow[fo] = row[fo * s.stride_f];
          }
          std::fill(drow + fhi, drow + out.freq, 0.0);
        }
      }
    }
  }
}

void col2im(const Matrix& cols, const MapShape& in, const MapShape& out, const Conv2dSpec& s, Matrix& dx) {
  for (int c = 0; c < in.channels; ++c) {
    double* dst = dx.data() + static_cast<std::ptrdiff_t>(c) * in.time * in.freq;
    for (int i = 0; i < s.kernel_t; ++i) {
      for (int j = 0; j < s.kernel_f; ++j) {
        const double* src =
            cols.data() + ((static_cast<std::ptrdiff_t>(c) * s.kernel_t + i) * s.kernel_f + j) * cols.cols();
        const auto [flo, fhi] = valid_range(out.freq, s.stride_f, j - s.pad_f, in.freq);
        for (int to = 0; to < out.time; ++to) {
          const int ti = to * s.stride_t + i - s.pad_t;
          if (ti < 0 || ti >= in.time) continue;
          double* row = dst + static_cast<std::ptrdiff_t>(ti) * in.freq + (j - s.pad_f);
          const double* srow = src + static_cast<std::ptrdiff_t>(to) * out.freq;
          if (s.stride_f == 1) {
            for (int fo = flo; fo < fhi; ++fo) row[fo] += srow[fo];
          } else {
            for (int fo = flo; fo < fhi; ++fo) row[fo * s.stride_f] += srow[fo];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const MapShape& in, const Tensor& weight, const Tensor& bias,
              const Conv2dSpec& spec) {
  if (x.rows() != in.channels || x.cols() != static_cast<Eigen::Index>(in.time) * in.freq) {
    throw Error("conv2d: input does not match its declared shape");
  }
  const int out_channels = static_cast<int>(weight.rows());
  if (weight.cols() != static_cast<Eigen::Index>(in.channels) * spec.kernel_t * spec.kernel_f) {
    throw Error("conv2d: weight shape does not match input channels and kernel");
  }
  const MapShape out = conv2d_output_shape(in, out_channels, spec);
  auto cols = std::make_shared<Matrix>();
  im2col(x.value(), in, out, spec, *cols);
  Matrix y = weight.value() * (*cols);
  if (bias.defined()) {
    if (bias.cols() != out_channels) throw Error("conv2d: bias shape mismatch");
    y.colwise() += bias.value().row(0).transpose();
  }
  std::vector<Tensor> parents{x, weight};
  if (bias.defined()) parents.push_back(bias);
  const bool has_bias = bias.defined();
  return make_result(std::move(y), parents, [cols, in, out, spec, has_bias](Node& self) {
    Node& px = *self.parents[0];
    Node& pw = *self.parents[1];
    if (pw.requires_grad) pw.grad_buffer().noalias() += self.grad * cols->transpose();
    if (has_bias && self.parents[2]->requires_grad) {
      self.parents[2]->accumulate_expr(self.grad.rowwise().sum().transpose());
    }
    if (px.requires_grad) {
      Matrix dcols = pw.value.transpose() * self.grad;
      col2im(dcols, in, out, spec, px.grad_buffer());
    }
  });
}

Tensor channels_to_frames(const Tensor& x, const MapShape& s) {
  if (x.rows() != s.channels || x.cols() != static_cast<Eigen::Index>(s.time) * s.freq) {
    throw Error("channels_to_frames: shape mismatch");
  }
  Matrix out(s.time, static_cast<Eigen::Index>(s.channels) * s.freq);
  for (int c = 0; c < s.channels; ++c) {
    for (int t = 0; t < s.time; ++t) {
      out.block(t, static_cast<Eigen::Index>(c) * s.freq, 1, s.freq) =
          x.value().block(c, static_cast<Eigen::Index>(t) * s.freq, 1, s.freq);
    }
  }
  return make_result(std::move(out), {x}, [s](Node& self) {
    Matrix& g = self.parents[0]->grad_buffer();
    for (int c = 0; c < s.channels; ++c) {
      for (int t = 0; t < s.time; ++t) {
        g.block(c, static_cast<Eigen::Index>(t) * s.freq, 1, s.freq) +=
            self.grad.block(t, static_cast<Eigen::Index>(c) * s.freq, 1, s.freq);
      }
    }
  });
}

Tensor broadcast_over_freq(const Tensor& frames, int freq) {
  const Eigen::Index T = frames.rows();
  const Eigen::Index D = frames.cols();
  Matrix out(D, T * freq);
  for (Eigen::Index d = 0; d < D; ++d) {
    for (Eigen::Index t = 0; t < T; ++t) out.block(d, t * freq, 1, freq).setConstant(frames.value()(t, d));
  }
  return make_result(std::move(out), {frames}, [freq, T, D](Node& self) {
    Matrix g(T, D);
    for (Eigen::Index d = 0; d < D; ++d) {
      for (Eigen::Index t = 0; t < T; ++t) {
        double acc = 0.0;
        const double* src = self.grad.data() + d * self.grad.cols() + t * freq;
        for (int f = 0; f < freq; ++f) acc += src[f];
        g(t, d) = acc;
      }
    }
    self.parents[0]->accumulate(g);
  });
}

Tensor freq_mean(const Tensor& x, const MapShape& s) {
  if (x.rows() != s.channels || x.cols() != static_cast<Eigen::Index>(s.time) * s.freq) {
    throw Error("freq_mean: shape mismatch");
  }
  Matrix out(s.time, s.channels);
  for (int c = 0; c < s.channels; ++c) {
    for (int t = 0; t < s.time; ++t) {
      double acc = 0.0;
      const double* src = x.value().data() + static_cast<std::ptrdiff_t>(c) * x.cols() + static_cast<std::ptrdiff_t>(t) * s.freq;
      for (int f = 0; f < s.freq; ++f) acc += src[f];
      out(t, c) = acc / s.freq;
    }
  }
  return make_result(std::move(out), {x}, [s](Node& self) {
    Matrix& g = self.parents[0]->grad_buffer();
    for (int c = 0; c < s.channels; ++c) {
      for (int t = 0; t < s.time; ++t) {
        g.block(c, static_cast<Eigen::Index>(t) * s.freq, 1, s.freq).array() += self.grad(t, c) / s.freq;
      }
    }
  });
}

Tensor frame_mean_pool(const Tensor& x, int win, int hop) {
  const Eigen::Index N = x.cols();
  if (N < win) throw Error("frame_mean_pool: signal shorter than one frame");
  const Eigen::Index T = 1 + (N - win) / hop;
  Matrix out(x.rows(), T);
  for (Eigen::Index c = 0; c < x.rows(); ++c) {
    const double* src = x.value().data() + c * N;
    for (Eigen::Index t = 0; t < T; ++t) {
      double acc = 0.0;
      for (int k = 0; k < win; ++k) acc += src[t * hop + k];
      out(c, t) = acc / win;
    }
  }
  return make_result(std::move(out), {x}, [win, hop, T, N](Node& self) {
    Matrix& g = self.parents[0]->grad_buffer();
    for (Eigen::Index c = 0; c < g.rows(); ++c) {
      double* dst = g.data() + c * N;
      for (Eigen::Index t = 0; t < T; ++t) {
        const double v = self.grad(c, t) / win;
        for (int k = 0; k < win; ++k) dst[t * hop + k] += v;
      }
    }
  });
}

namespace {

constexpr double kPi = 3.14159265358979323846;

// Sinc band edge term g(f) = sin(2 pi f t) / (pi t), g(f) = 2 f at t = 0, with
// f in cycles per sample; and its derivative 2 cos(2 pi f t).
inline double edge(double f, double t) { return t == 0.0 ? 2.0 * f : std::sin(2.0 * kPi * f * t) / (kPi * t); }
inline double edge_deriv(double f, double t) { return 2.0 * std::cos(2.0 * kPi * f * t); }

}  // namespace

Tensor sinc_kernels(const Tensor& low_hz, const Tensor& high_hz, int taps, double sample_rate) {
  if (low_hz.cols() != 1 || high_hz.cols() != 1 || low_hz.rows() != high_hz.rows()) {
    throw Error("sinc_kernels: cutoffs must be matching column vectors");
  }
  if (taps < 3 || taps % 2 == 0) throw Error("sinc_kernels: taps must be odd and >= 3");
  const Eigen::Index C = low_hz.rows();
  std::vector<double> window(taps);
  for (int n = 0; n < taps; ++n) window[n] = 0.54 - 0.46 * std::cos(2.0 * kPi * n / (taps - 1));
  const double half = (taps - 1) / 2.0;
  Matrix out(C, taps);
  for (Eigen::Index c = 0; c < C; ++c) {
    const double f1 = low_hz.value()(c, 0) / sample_rate;
    const double f2 = high_hz.value()(c, 0) / sample_rate;
    const double denom = 2.0 * (f2 - f1);
    for (int n = 0; n < taps; ++n) {
      const double t = n - half;
      out(c, n) = window[n] * (edge(f2, t) - edge(f1, t)) / denom;
    }
  }
  return make_result(std::move(out), {low_hz, high_hz}, [taps, sample_rate, window, half](Node& self) {
    Node& pl = *self.parents[0];
    Node& ph = *self.parents[1];
    Matrix dl = Matrix::Zero(pl.value.rows(), 1);
    Matrix dh = Matrix::Zero(ph.value.rows(), 1);
    for (Eigen::Index c = 0; c < pl.value.rows(); ++c) {
      const double f1 = pl.value(c, 0) / sample_rate;
      const double f2 = ph.value(c, 0) / sample_rate;
      const double denom = 2.0 * (f2 - f1);
      double g1 = 0.0, g2 = 0.0;
      for (int n = 0; n < taps; ++n) {
        const double t = n - half;
        const double diff = edge(f2, t) - edge(f1, t);
        const double up = self.grad(c, n) * window[n];
        // d/df2 [diff / denom] and d/df1 [diff / denom]
        g2 += up * (edge_deriv(f2, t) / denom - 2.0 * diff / (denom * denom));
        g1 += up * (-edge_deriv(f1, t) / denom + 2.0 * diff / (denom * denom));
      }
      dl(c, 0) = g1 / sample_rate;
      dh(c, 0) = g2 / sample_rate;
    }
    if (pl.requires_grad) pl.accumulate(dl);
    if (ph.requires_grad) ph.accumulate(dh);
  });
}

Tensor conv1d_same(const Tensor& kernels, std::span<const double> signal) {
  const Eigen::Index C = kernels.rows();
  const int K = static_cast<int>(kernels.cols());
  const auto N = static_cast<Eigen::Index>(signal.size());
  const int half = K / 2;
  std::vector<double> padded(static_cast<std::size_t>(N + K - 1), 0.0);
  std::copy(signal.begin(), signal.end(), padded.begin() + half);
  // Cols chunked to bound memory: cols(k, n) = padded[n + k].
  const Eigen::Index kChunk = 2048;
  Matrix out(C, N);
  Matrix cols;
  for (Eigen::Index start = 0; start < N; start += kChunk) {
    const Eigen::Index len = std::min(kChunk, N - start);
    cols.resize(K, len);
    for (int k = 0; k < K; ++k) {
      for (Eigen::Index n = 0; n < len; ++n) cols(k, n) = padded[static_cast<std::size_t>(start + n + k)];
    }
    out.middleCols(start, len).noalias() = kernels.value() * cols;
  }
  return make_result(std::move(out), {kernels}, [padded = std::move(padded), K, N, kChunk](Node& self) {
    Matrix& g = self.parents[0]->grad_buffer();
    Matrix cols;
    for (Eigen::Index start = 0; start < N; start += kChunk) {
      const Eigen::Index len = std::min(kChunk, N - start);
      cols.resize(K, len);
      for (int k = 0; k < K; ++k) {
        for (Eigen::Index n = 0; n < len; ++n) cols(k, n) = padded[static_cast<std::size_t>(start + n + k)];
      }
      g.noalias() += self.grad.middleCols(start, len) * cols.transpose();
    }
  });
}

}  // namespace mosanet::nn
