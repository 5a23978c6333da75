#include "mosanet/features/filterbank.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mosanet/common/error.hpp"
#include "mosanet/features/stft.hpp"
#include "mosanet/nn/ops.hpp"

namespace mosanet::features {

namespace {
double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }
}  // namespace

FilterbankParams mel_initialized_filterbank(int count) {
  if (count < 1) throw UsageError("filterbank needs at least one filter");
  FilterbankParams p;
  const double lo = hz_to_mel(kMinLowHz);
  const double hi = hz_to_mel(kMaxHighHz);
  std::vector<double> edges(static_cast<std::size_t>(count) + 1);
  for (int i = 0; i <= count; ++i) edges[i] = mel_to_hz(lo + (hi - lo) * i / count);
  for (int i = 0; i < count; ++i) {
    p.low_hz.push_back(edges[i]);
    p.high_hz.push_back(std::max(edges[i + 1], edges[i] + kMinBandHz));
  }
  project_bands(p.low_hz, p.high_hz);
  return p;
}

void project_bands(std::vector<double>& low_hz, std::vector<double>& high_hz) {
  for (std::size_t i = 0; i < low_hz.size(); ++i) {
    high_hz[i] = std::clamp(high_hz[i], kMinLowHz + kMinBandHz, kMaxHighHz);
    low_hz[i] = std::clamp(low_hz[i], kMinLowHz, high_hz[i] - kMinBandHz);
  }
}

void project_bands(nn::Tensor& low_hz, nn::Tensor& high_hz) {
  auto& lo = low_hz.mutable_value();
  auto& hi = high_hz.mutable_value();
  for (Eigen::Index i = 0; i < lo.rows(); ++i) {
    hi(i, 0) = std::clamp(hi(i, 0), kMinLowHz + kMinBandHz, kMaxHighHz);
    lo(i, 0) = std::clamp(lo(i, 0), kMinLowHz, hi(i, 0) - kMinBandHz);
  }
}

void validate(const FilterbankParams& p) {
  if (p.low_hz.size() != p.high_hz.size() || p.low_hz.empty()) {
    throw UsageError("filterbank: cutoff lists must be non-empty and equal length");
  }
  if (p.kernel_taps < 3 || p.kernel_taps % 2 == 0) throw UsageError("filterbank: kernel taps must be odd");
  if (p.frame_length < 1 || p.hop < 1) throw UsageError("filterbank: invalid framing");
  for (std::size_t i = 0; i < p.low_hz.size(); ++i) {
    if (!(p.low_hz[i] > 0.0 && p.low_hz[i] < p.high_hz[i] && p.high_hz[i] < kSampleRate / 2.0)) {
      throw UsageError("filterbank: band " + std::to_string(i) + " is not a valid band-pass");
    }
  }
}

nn::Tensor sinc_filterbank(const Waveform& w, const nn::Tensor& low_hz, const nn::Tensor& high_hz,
                           const FilterbankParams& geometry) {
  if (w.size() < static_cast<std::size_t>(geometry.frame_length)) {
    throw UsageError("filterbank: signal shorter than one frame");
  }
  const nn::Tensor kernels = nn::sinc_kernels(low_hz, high_hz, geometry.kernel_taps, w.sample_rate);
  const nn::Tensor filtered = nn::conv1d_same(kernels, w.samples);
  const nn::Tensor pooled = nn::frame_mean_pool(nn::abs(filtered), geometry.frame_length, geometry.hop);
  return nn::transpose(nn::log_eps(pooled, kLogFloor));
}

Matrix sinc_filterbank(const Waveform& w, const FilterbankParams& params) {
  validate(params);
  nn::NoGradGuard guard;
  const auto n = static_cast<Eigen::Index>(params.low_hz.size());
  const nn::Tensor lo(Eigen::Map<const Matrix>(params.low_hz.data(), n, 1));
  const nn::Tensor hi(Eigen::Map<const Matrix>(params.high_hz.data(), n, 1));
  return sinc_filterbank(w, lo, hi, params).value();
}

}  // namespace mosanet::features
