#pragma once

#include <complex>
#include <filesystem>
#include <vector>

#include "mosanet/common/waveform.hpp"

namespace mosanet::labels {

/// One biquad: (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2).
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
};
using SosFilter = std::vector<Biquad>;

/// Digital Butterworth designs via the bilinear transform with prewarping.
/// `order` is the prototype order, so the band-pass has 2*order poles.
SosFilter butter_lowpass(int order, double cutoff_hz, double sample_rate);
SosFilter butter_bandpass(int order, double low_hz, double high_hz, double sample_rate);

std::complex<double> frequency_response(const SosFilter& f, double hz, double sample_rate);
/// Causal direct-form II transposed cascade, zero initial state.
std::vector<double> sos_filter(const SosFilter& f, const std::vector<double>& x);

struct EnvelopeSeries {
  std::vector<double> values;
  double frame_rate = 100.0;
};

/// Amplitude envelope of the second channel of a four-channel tone vocoder:
/// band-pass 457-1202 Hz, full-wave rectification, 50 Hz low-pass (both
/// 4th-order Butterworth), sampled at 100 Hz. Needs at least 100 ms.
EnvelopeSeries envelope_band2(const Waveform& w);

/// CSV with columns time_s,value.
void write_envelope_csv(const std::filesystem::path& path, const EnvelopeSeries& e);

}  // namespace mosanet::labels
