#pragma once

#include <cstddef>
#include <vector>

#include "mosanet/common/matrix.hpp"
#include "mosanet/common/waveform.hpp"

namespace mosanet::features {

inline constexpr double kLogFloor = 1e-12;

enum class WindowKind { Hamming, Hann };

/// Analysis setup: 512-point FFT, 32 ms Hamming window, 16 ms hop.
struct StftConfig {
  int n_fft = 512;
  int win_length = 512;
  int hop = 256;
  WindowKind window = WindowKind::Hamming;

  int bins() const { return n_fft / 2 + 1; }
};

/// Periodic window of the given length.
std::vector<double> make_window(WindowKind kind, int length);

/// 1 + floor((n - win) / hop); no edge padding.
int frame_count(std::size_t samples, const StftConfig& cfg);

struct ComplexFrames {
  ComplexMatrix values;  // frames x bins
  StftConfig config;
  std::size_t signal_length = 0;

  int frame_count() const { return static_cast<int>(values.rows()); }
  int bin_count() const { return static_cast<int>(values.cols()); }
};

enum class SpectralKind { PS, LPS, COMPLEX_RI };

struct SpectralFrames {
  Matrix values;  // frames x bins (2 x bins for COMPLEX_RI: real block, then imaginary)
  SpectralKind kind = SpectralKind::PS;

  int frame_count() const { return static_cast<int>(values.rows()); }
  int bin_count() const { return static_cast<int>(values.cols()); }
};

/// Throws UsageError when the waveform is shorter than one window.
ComplexFrames stft(const Waveform& w, const StftConfig& cfg = {});

SpectralFrames power_spec(const ComplexFrames& frames);
/// log(|X|^2 + 1e-12)
SpectralFrames log_power_spec(const ComplexFrames& frames);
SpectralFrames ri_features(const ComplexFrames& frames);

Matrix magnitude(const ComplexFrames& frames);
Matrix phase(const ComplexFrames& frames);

/// Weighted overlap-add: each frame is inverse transformed, multiplied by the
/// analysis window and normalized by the summed squared windows.
/// `length` 0 means (frames - 1) * hop + win; otherwise the output is
/// zero-padded or truncated to `length`.
Waveform istft(const Matrix& magnitude, const Matrix& phase, const StftConfig& cfg = {},
               std::size_t length = 0);
Waveform istft(const ComplexFrames& frames, std::size_t length = 0);
/// Inverse of ri_features.
Waveform istft_ri(const SpectralFrames& ri, const StftConfig& cfg = {}, std::size_t length = 0);

}  // namespace mosanet::features
