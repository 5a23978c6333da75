#include "mosanet/corpus/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mosanet/common/error.hpp"
#include "mosanet/common/rng.hpp"

namespace mosanet::corpus {

namespace {

std::size_t sample_count(double duration_s) {
  if (!(duration_s > 0.0)) throw UsageError("synthetic signal duration must be positive");
  return static_cast<std::size_t>(std::llround(duration_s * kSampleRate));
}

// Gain of a two-pole resonance at frequency f.
double resonance(double f, double centre, double bandwidth) {
  const double d = (f - centre) / bandwidth;
  return 1.0 / (1.0 + d * d);
}

void normalize_peak(std::vector<double>& x, double peak) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  if (m > 0.0) {
    for (double& v : x) v *= peak / m;
  }
}

}  // namespace

Waveform synth_speech(std::uint64_t seed, double duration_s) {
  const std::size_t n = sample_count(duration_s);
  Rng rng(derive_seed(seed, "synth_speech"));
  Waveform w;
  w.samples.assign(n, 0.0);
  const double fs = kSampleRate;
  std::size_t pos = static_cast<std::size_t>(rng.uniform(0.0, 0.05) * fs);
  while (pos < n) {
    const auto len = static_cast<std::size_t>(rng.uniform(0.12, 0.3) * fs);
    const double f0a = rng.uniform(90.0, 220.0);
    const double f0b = f0a * rng.uniform(0.8, 1.25);
    const double f1 = rng.uniform(300.0, 900.0);
    const double f2 = rng.uniform(900.0, 2500.0);
    const double amp = rng.uniform(0.4, 1.0);
    double phase = 0.0;
    for (std::size_t i = 0; i < len && pos + i < n; ++i) {
      const double u = static_cast<double>(i) / static_cast<double>(len);
      const double f0 = f0a + (f0b - f0a) * u;
      phase += 2.0 * std::numbers::pi * f0 / fs;
      const double env = std::sin(std::numbers::pi * u);
      double s = 0.0;
      for (int h = 1; f0 * h < 4000.0; ++h) {
        const double f = f0 * h;
        s += (resonance(f, f1, 120.0) + 0.6 * resonance(f, f2, 200.0)) * std::sin(h * phase) / std::sqrt(h);
      }
      w.samples[pos + i] += amp * env * env * s;
    }
    pos += len + static_cast<std::size_t>(rng.uniform(0.03, 0.12) * fs);
  }
  // Faint breath noise keeps silent stretches from being exactly zero.
  for (double& v : w.samples) v += 1e-4 * rng.normal();
  normalize_peak(w.samples, 0.5);
  return w;
}

std::vector<std::string> synth_noise_kinds() { return {"white", "pink", "babble", "hum"}; }

Waveform synth_noise(const std::string& kind, std::uint64_t seed, double duration_s) {
  const std::size_t n = sample_count(duration_s);
  Rng rng(derive_seed(seed, "synth_noise." + kind));
  Waveform w;
  w.samples.assign(n, 0.0);
  if (kind == "white") {
    for (double& v : w.samples) v = rng.normal();
  } else if (kind == "pink") {
    // Paul Kellet's filter.
    double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
    for (double& v : w.samples) {
      const double white = rng.normal();
      b0 = 0.99886 * b0 + white * 0.0555179;
      b1 = 0.99332 * b1 + white * 0.0750759;
      b2 = 0.96900 * b2 + white * 0.1538520;
      b3 = 0.86650 * b3 + white * 0.3104856;
      b4 = 0.55000 * b4 + white * 0.5329522;
      b5 = -0.7616 * b5 - white * 0.0168980;
      v = b0 + b1 + b2 + b3 + b4 + b5 + b6 + white * 0.5362;
      b6 = white * 0.115926;
    }
  } else if (kind == "babble") {
    for (int talker = 0; talker < 4; ++talker) {
      const Waveform s = synth_speech(derive_seed(seed, "babble." + std::to_string(talker)), duration_s);
      for (std::size_t i = 0; i < n; ++i) w.samples[i] += s.samples[i];
    }
  } else if (kind == "hum") {
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / kSampleRate;
      for (int h = 1; h <= 8; ++h) w.samples[i] += std::sin(2.0 * std::numbers::pi * 50.0 * h * t) / h;
      w.samples[i] += 0.05 * rng.normal();
    }
  } else {
    throw UsageError("unknown synthetic noise '" + kind + "'");
  }
  normalize_peak(w.samples, 0.5);
  return w;
}

}  // namespace mosanet::corpus
