#pragma once

#include <cstddef>

#include "mosanet/common/waveform.hpp"

namespace mosanet::labels {

/// Short-time objective intelligibility, numerically following the widely
/// used reference implementation: resampling to 10 kHz with an Octave-style
/// Kaiser FIR, silent-frame removal (40 dB range), 15 one-third-octave bands
/// from 150 Hz, 30-frame (384 ms) segments and a -15 dB SDR clipping bound.
/// Signals of unequal length are aligned by dropping trailing samples.
/// Throws UsageError("... minimum duration ...") for too-short input.
double stoi(const Waveform& clean, const Waveform& degraded);

/// sum((x - y)^2) / sum(x^2). Throws UsageError on zero-power clean or a
/// length mismatch.
double sdi(const Waveform& clean, const Waveform& processed);

struct SsnrOptions {
  double frame_ms = 32.0;
  double hop_ms = 16.0;
  double min_db = -10.0;
  double max_db = 35.0;
};

/// Mean over frames of the clamped per-frame SNR. A frame with zero error
/// takes the upper clamp; zero clean energy with nonzero error the lower one.
double ssnr(const Waveform& clean, const Waveform& processed, const SsnrOptions& opt = {});
/// ssnr(clean, enhanced) - ssnr(clean, noisy)
double ssnri(const Waveform& clean, const Waveform& noisy, const Waveform& enhanced,
             const SsnrOptions& opt = {});

struct FrameMeasure {
  double value = 0.0;       // trimmed mean over frames
  std::size_t frames = 0;   // frames used
  std::size_t skipped = 0;  // frames rejected (silent or unstable LPC)
};

/// Log-likelihood ratio between order-16 LPC models on 30 ms Hann frames
/// with a 7.5 ms hop, averaged over the smallest 95% of frame values.
FrameMeasure llr(const Waveform& clean, const Waveform& processed);

/// Weighted spectral slope over 25 critical bands, same framing as llr,
/// averaged over the smallest 95% of frame values.
FrameMeasure wss(const Waveform& clean, const Waveform& processed);

/// Composite signal-distortion rating, clamped to [1, 5].
double csig(double llr_value, double pesq_value, double wss_value);
/// Before clamping.
double csig_raw(double llr_value, double pesq_value, double wss_value);

}  // namespace mosanet::labels
