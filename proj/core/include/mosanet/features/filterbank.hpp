#pragma once

#include <vector>

#include "mosanet/common/waveform.hpp"
#include "mosanet/nn/tensor.hpp"

namespace mosanet::features {

/// Learnable sinc band-pass filterbank geometry and cutoffs.
struct FilterbankParams {
  std::vector<double> low_hz;
  std::vector<double> high_hz;
  int kernel_taps = 251;  // about 15.7 ms at 16 kHz
  int frame_length = 512;  // pooling window, matches the STFT window
  int hop = 256;           // matches the STFT hop

  int filter_count() const { return static_cast<int>(low_hz.size()); }
};

inline constexpr double kMinLowHz = 30.0;
inline constexpr double kMinBandHz = 30.0;
inline constexpr double kMaxHighHz = 7990.0;

/// `count` bands with edges equally spaced on the mel scale between 30 Hz and
/// just under Nyquist.
FilterbankParams mel_initialized_filterbank(int count = 80);

/// Repairs cutoffs in place: high clamped to [60, 7990] Hz, then low to
/// [30, high - 30] Hz, so every filter stays a valid band-pass.
void project_bands(std::vector<double>& low_hz, std::vector<double>& high_hz);
void project_bands(nn::Tensor& low_hz, nn::Tensor& high_hz);

/// Throws UsageError for inverted or out-of-range bands or bad geometry.
void validate(const FilterbankParams& p);

/// Differentiable extraction: convolve with the windowed sinc kernels,
/// rectify, average over STFT-aligned frames, log-compress. Returns
/// frames x filters; the frame count equals the STFT frame count.
nn::Tensor sinc_filterbank(const Waveform& w, const nn::Tensor& low_hz, const nn::Tensor& high_hz,
                           const FilterbankParams& geometry);

/// Value-only form.
Matrix sinc_filterbank(const Waveform& w, const FilterbankParams& params);

}  // namespace mosanet::features
