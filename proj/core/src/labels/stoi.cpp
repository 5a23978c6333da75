#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "mosanet/common/error.hpp"
#include "mosanet/common/fft.hpp"
#include "mosanet/labels/metrics.hpp"

namespace mosanet::labels {

namespace {

constexpr int kFs = 10000;
constexpr int kFrame = 256;
constexpr int kHop = 128;
constexpr int kNfft = 512;
constexpr int kBands = 15;
constexpr double kMinFreq = 150.0;
constexpr int kSegment = 30;
constexpr double kBeta = -15.0;
constexpr double kDynRange = 40.0;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Octave-compatible anti-aliasing filter for rational resampling up/down
// (already reduced), normalized to unit sum.
std::vector<double> resample_filter(int up, int down) {
  const double stop = 1.0 / (2.0 * std::max(up, down));
  const double roll = stop / 10.0;
  const double rejection_db = 60.0;
  const int L = static_cast<int>(std::ceil((rejection_db - 8.0) / (28.714 * roll)));
  const double beta = 0.1102 * (rejection_db - 8.7);
  const int M = 2 * L + 1;
  std::vector<double> h(M);
  double sum = 0.0;
  const double i0b = std::cyl_bessel_i(0.0, beta);
  for (int n = 0; n < M; ++n) {
    const double t = n - L;
    const double arg = 2.0 * stop * t;
    const double sinc = arg == 0.0 ? 1.0 : std::sin(M_PI * arg) / (M_PI * arg);
    const double r = (n - L) / static_cast<double>(L);
    const double kaiser = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0b;
    h[n] = kaiser * 2.0 * up * stop * sinc;
    sum += h[n];
  }
  for (double& v : h) v /= sum;
  return h;
}

// Polyphase resampling with the filter centred on each output sample and zero
// padding at the edges; output length ceil(n * up / down).
std::vector<double> resample(std::span<const double> x, int up, int down) {
  const std::vector<double> h = resample_filter(up, down);
  const long half = static_cast<long>(h.size() - 1) / 2;
  const long n_in = static_cast<long>(x.size());
  const long n_out = (n_in * up + down - 1) / down;
  std::vector<double> y(static_cast<std::size_t>(n_out));
  for (long m = 0; m < n_out; ++m) {
    const long centre = m * down + half;  // h index = centre - up * n
    long n_lo = centre - 2 * half;
    n_lo = n_lo <= 0 ? 0 : (n_lo + up - 1) / up;
    const long n_hi = std::min(n_in - 1, centre / up);
    double acc = 0.0;
    for (long n = n_lo; n <= n_hi; ++n) acc += x[n] * h[centre - up * n];
    y[m] = acc * up;
  }
  return y;
}

std::vector<double> hann_inner(int n) {
  // Hann of length n + 2 without its zero end points.
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * (i + 1) / (n + 1));
  return w;
}

// Drops frames of both signals whose clean energy is more than kDynRange
// below the loudest clean frame, then overlap-adds the survivors.
void remove_silent_frames(std::vector<double>& x, std::vector<double>& y) {
  const auto w = hann_inner(kFrame);
  const long len = static_cast<long>(x.size());
  std::vector<long> starts;
  for (long i = 0; i < len - kFrame; i += kHop) starts.push_back(i);
  std::vector<double> energy(starts.size());
  for (std::size_t f = 0; f < starts.size(); ++f) {
    double s = 0.0;
    for (int k = 0; k < kFrame; ++k) {
      const double v = w[k] * x[starts[f] + k];
      s += v * v;
    }
    energy[f] = 20.0 * std::log10(std::sqrt(s) + kEps);
  }
  if (energy.empty()) throw UsageError("stoi: signal below minimum duration");
  const double top = *std::max_element(energy.begin(), energy.end());
  std::vector<long> kept;
  for (std::size_t f = 0; f < starts.size(); ++f) {
    if (top - kDynRange - energy[f] < 0) kept.push_back(starts[f]);
  }
  const std::size_t out_len = (kept.size() - 1) * kHop + kFrame;
  std::vector<double> xo(out_len, 0.0), yo(out_len, 0.0);
  for (std::size_t f = 0; f < kept.size(); ++f) {
    for (int k = 0; k < kFrame; ++k) {
      xo[f * kHop + k] += w[k] * x[kept[f] + k];
      yo[f * kHop + k] += w[k] * y[kept[f] + k];
    }
  }
  x = std::move(xo);
  y = std::move(yo);
}

// Band-summed power of each STFT frame: bands x frames.
std::vector<std::vector<double>> third_octave_envelopes(const std::vector<double>& x,
                                                        const std::vector<std::pair<int, int>>& bands) {
  const auto w = hann_inner(kFrame);
  RealFft fft(kNfft);
  std::vector<double> frame(kFrame);
  std::vector<std::complex<double>> spec;
  std::vector<std::vector<double>> out(bands.size());
  const long len = static_cast<long>(x.size());
  for (long i = 0; i < len - kFrame; i += kHop) {
    for (int k = 0; k < kFrame; ++k) frame[k] = w[k] * x[i + k];
    fft.forward(frame, spec);
    for (std::size_t b = 0; b < bands.size(); ++b) {
      double s = 0.0;
      for (int k = bands[b].first; k < bands[b].second; ++k) s += std::norm(spec[k]);
      out[b].push_back(std::sqrt(s));
    }
  }
  return out;
}

std::vector<std::pair<int, int>> third_octave_bands() {
  std::vector<double> f(kNfft / 2 + 1);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = static_cast<double>(i) * kFs / kNfft;
  auto nearest = [&](double target) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(f.size()); ++i) {
      if ((f[i] - target) * (f[i] - target) < (f[best] - target) * (f[best] - target)) best = i;
    }
    return best;
  };
  std::vector<std::pair<int, int>> bands;
  for (int k = 0; k < kBands; ++k) {
    const double lo = kMinFreq * std::pow(2.0, (2.0 * k - 1.0) / 6.0);
    const double hi = kMinFreq * std::pow(2.0, (2.0 * k + 1.0) / 6.0);
    bands.emplace_back(nearest(lo), nearest(hi));
  }
  return bands;
}

}  // namespace

double stoi(const Waveform& clean, const Waveform& degraded) {
  validate(clean);
  validate(degraded);
  const std::size_t n = std::min(clean.size(), degraded.size());
  if (n < static_cast<std::size_t>(0.384 * clean.sample_rate)) {
    throw UsageError("stoi: signal shorter than the minimum duration of 384 ms");
  }
  std::span<const double> xs(clean.samples.data(), n), ys(degraded.samples.data(), n);
  // 16 kHz -> 10 kHz is 5/8.
  std::vector<double> x = resample(xs, 5, 8);
  std::vector<double> y = resample(ys, 5, 8);
  remove_silent_frames(x, y);

  static const auto bands = third_octave_bands();
  const auto xe = third_octave_envelopes(x, bands);
  const auto ye = third_octave_envelopes(y, bands);
  const int frames = static_cast<int>(xe.front().size());
  if (frames < kSegment) {
    throw UsageError("stoi: fewer than 30 non-silent frames; input is below the minimum duration");
  }

  const double clip = std::pow(10.0, -kBeta / 20.0);
  double total = 0.0;
  std::vector<double> xs_seg(kSegment), ys_seg(kSegment);
  for (int m = kSegment; m <= frames; ++m) {
    for (int b = 0; b < kBands; ++b) {
      double nx = 0.0, ny = 0.0;
      for (int j = 0; j < kSegment; ++j) {
        xs_seg[j] = xe[b][m - kSegment + j];
        ys_seg[j] = ye[b][m - kSegment + j];
        nx += xs_seg[j] * xs_seg[j];
        ny += ys_seg[j] * ys_seg[j];
      }
      const double alpha = std::sqrt(nx) / (std::sqrt(ny) + kEps);
      double mx = 0.0, my = 0.0;
      for (int j = 0; j < kSegment; ++j) {
        ys_seg[j] = std::min(ys_seg[j] * alpha, xs_seg[j] * (1.0 + clip));
        mx += xs_seg[j];
        my += ys_seg[j];
      }
      mx /= kSegment;
      my /= kSegment;
      double sxx = 0.0, syy = 0.0, sxy = 0.0;
      for (int j = 0; j < kSegment; ++j) {
        xs_seg[j] -= mx;
        ys_seg[j] -= my;
        sxx += xs_seg[j] * xs_seg[j];
        syy += ys_seg[j] * ys_seg[j];
      }
      const double dx = std::sqrt(sxx) + kEps, dy = std::sqrt(syy) + kEps;
      for (int j = 0; j < kSegment; ++j) sxy += (xs_seg[j] / dx) * (ys_seg[j] / dy);
      total += sxy;
    }
  }
  return total / (static_cast<double>(frames - kSegment + 1) * kBands);
}

}  // namespace mosanet::labels
