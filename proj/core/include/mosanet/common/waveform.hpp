#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mosanet {

inline constexpr int kSampleRate = 16000;

/// Mono 16 kHz signal. Samples are amplitudes in [-1, 1] when loaded from
/// 16-bit PCM; arithmetic on waveforms (mixing, enhancement) may leave that
/// range and is clipped only when written back to disk.
struct Waveform {
  std::vector<double> samples;
  int sample_rate = kSampleRate;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
  std::span<const double> view() const { return samples; }
};

/// Throws UsageError unless the waveform is non-empty, finite and 16 kHz.
void validate(const Waveform& w);

/// Mean squared amplitude.
double power(std::span<const double> x);

}  // namespace mosanet
