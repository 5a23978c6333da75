#include "mosanet/labels/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "mosanet/common/error.hpp"
#include "mosanet/common/fft.hpp"

namespace mosanet::labels {

namespace {

void require_same_length(const Waveform& a, const Waveform& b, const char* who) {
  validate(a);
  validate(b);
  if (a.size() != b.size()) {
    throw UsageError(std::string(who) + ": length mismatch (" + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + " samples)");
  }
}

// Framing shared by llr and wss: 30 ms Hann frames, quarter-window hop.
struct Framing {
  int win = 0;
  int hop = 0;
  int count = 0;
  std::vector<double> window;
};

Framing composite_framing(const Waveform& w) {
  Framing f;
  f.win = static_cast<int>(std::lround(30.0 * w.sample_rate / 1000.0));
  f.hop = f.win / 4;
  f.count = static_cast<int>(w.size() / f.hop) - f.win / f.hop;
  f.window.resize(f.win);
  for (int i = 0; i < f.win; ++i) f.window[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * (i + 1) / (f.win + 1)));
  return f;
}

double trimmed_mean(std::vector<double> values, double keep) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(values.size() * keep)));
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += values[i];
  return s / static_cast<double>(n);
}

constexpr int kLpcOrder = 16;

struct Lpc {
  std::array<double, kLpcOrder + 1> r{};  // autocorrelation lags 0..P
  std::array<double, kLpcOrder + 1> a{};  // [1, -a_1, ..., -a_P]
};

// Autocorrelation method with Levinson-Durbin; nullopt when the frame is
// silent or the recursion leaves the stable region.
std::optional<Lpc> lpc(const std::vector<double>& frame) {
  Lpc out;
  const int n = static_cast<int>(frame.size());
  for (int k = 0; k <= kLpcOrder; ++k) {
    double s = 0.0;
    for (int i = 0; i + k < n; ++i) s += frame[i] * frame[i + k];
    out.r[k] = s;
  }
  if (!(out.r[0] > 0.0)) return std::nullopt;
  std::array<double, kLpcOrder + 1> a{}, past{};
  double err = out.r[0];
  for (int i = 1; i <= kLpcOrder; ++i) {
    double acc = 0.0;
    for (int j = 1; j < i; ++j) acc += a[j] * out.r[i - j];
    const double k = (out.r[i] - acc) / err;
    if (!(std::abs(k) < 1.0)) return std::nullopt;
    past = a;
    a[i] = k;
    for (int j = 1; j < i; ++j) a[j] = past[j] - k * past[i - j];
    err *= 1.0 - k * k;
    if (!(err > 0.0)) return std::nullopt;
  }
  out.a[0] = 1.0;
  for (int i = 1; i <= kLpcOrder; ++i) out.a[i] = -a[i];
  return out;
}

// a R a^T with R the Toeplitz matrix of autocorrelation r.
double toeplitz_quadratic(const std::array<double, kLpcOrder + 1>& a, const std::array<double, kLpcOrder + 1>& r) {
  double s = 0.0;
  for (int i = 0; i <= kLpcOrder; ++i) {
    for (int j = 0; j <= kLpcOrder; ++j) s += a[i] * r[std::abs(i - j)] * a[j];
  }
  return s;
}

constexpr int kCritBands = 25;
constexpr std::array<double, kCritBands> kCentreHz = {
    50.0,    120.000, 190.000, 260.000, 330.000, 400.000, 470.000, 540.000, 617.372,
    703.378, 798.717, 904.128, 1020.38, 1148.30, 1288.72, 1442.54, 1610.70, 1794.16,
    1993.93, 2211.08, 2446.71, 2701.97, 2978.04, 3276.17, 3597.63};
constexpr std::array<double, kCritBands> kBandwidthHz = {
    70.0000, 70.0000, 70.0000, 70.0000, 70.0000, 70.0000, 70.0000, 77.3724, 86.0056,
    95.3398, 105.411, 116.256, 127.914, 140.423, 153.823, 168.154, 183.457, 199.776,
    217.153, 235.631, 255.255, 276.072, 298.126, 321.465, 346.136};

// Critical-band energies in dB and the spectral-slope weights of one frame.
struct BandFrame {
  std::array<double, kCritBands> energy{};
  std::array<double, kCritBands - 1> slope{};
  std::array<double, kCritBands - 1> weight{};
};

BandFrame band_frame(const std::vector<std::complex<double>>& spec, const std::vector<std::vector<double>>& filters) {
  constexpr double kMax = 20.0, kLocMax = 1.0;
  BandFrame b;
  const std::size_t half = filters.front().size();
  for (int i = 0; i < kCritBands; ++i) {
    double e = 0.0;
    for (std::size_t k = 0; k < half; ++k) e += std::norm(spec[k]) * filters[i][k];
    b.energy[i] = 10.0 * std::log10(std::max(e, 1e-10));
  }
  for (int i = 0; i < kCritBands - 1; ++i) b.slope[i] = b.energy[i + 1] - b.energy[i];
  const double top = *std::max_element(b.energy.begin(), b.energy.end());
  for (int i = 0; i < kCritBands - 1; ++i) {
    // Nearest local peak along the slope sign. The rising branch indexes one
    // band below the peak, as the reference composite-measure code does.
    double peak;
    if (b.slope[i] > 0) {
      int n = i;
      while (n < kCritBands - 1 && b.slope[n] > 0) ++n;
      peak = b.energy[n - 1];
    } else {
      int n = i;
      while (n >= 0 && b.slope[n] <= 0) --n;
      peak = b.energy[n + 1];
    }
    const double w_max = kMax / (kMax + top - b.energy[i]);
    const double w_loc = kLocMax / (kLocMax + peak - b.energy[i]);
    b.weight[i] = w_max * w_loc;
  }
  return b;
}

}  // namespace

double sdi(const Waveform& clean, const Waveform& processed) {
  require_same_length(clean, processed, "sdi");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double d = clean.samples[i] - processed.samples[i];
    num += d * d;
    den += clean.samples[i] * clean.samples[i];
  }
  if (den == 0.0) throw UsageError("sdi: clean signal has zero power");
  return num / den;
}

double ssnr(const Waveform& clean, const Waveform& processed, const SsnrOptions& opt) {
  require_same_length(clean, processed, "ssnr");
  const auto win = static_cast<std::size_t>(std::lround(opt.frame_ms * clean.sample_rate / 1000.0));
  const auto hop = static_cast<std::size_t>(std::lround(opt.hop_ms * clean.sample_rate / 1000.0));
  if (win == 0 || hop == 0 || !(opt.min_db < opt.max_db)) throw UsageError("ssnr: invalid options");
  const std::size_t n = clean.size();
  const std::size_t frames = n <= win ? 1 : 1 + (n - win) / hop;
  double total = 0.0;
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t start = f * hop;
    const std::size_t end = std::min(n, start + win);
    double sig = 0.0, err = 0.0;
    for (std::size_t i = start; i < end; ++i) {
      const double d = clean.samples[i] - processed.samples[i];
      sig += clean.samples[i] * clean.samples[i];
      err += d * d;
    }
    double v;
    if (err == 0.0) {
      v = opt.max_db;
    } else if (sig == 0.0) {
      v = opt.min_db;
    } else {
      v = std::clamp(10.0 * std::log10(sig / err), opt.min_db, opt.max_db);
    }
    total += v;
  }
  return total / static_cast<double>(frames);
}

double ssnri(const Waveform& clean, const Waveform& noisy, const Waveform& enhanced, const SsnrOptions& opt) {
  return ssnr(clean, enhanced, opt) - ssnr(clean, noisy, opt);
}

FrameMeasure llr(const Waveform& clean, const Waveform& processed) {
  require_same_length(clean, processed, "llr");
  const Framing fr = composite_framing(clean);
  std::vector<double> values;
  FrameMeasure out;
  std::vector<double> cf(fr.win), pf(fr.win);
  for (int f = 0; f < fr.count; ++f) {
    const std::size_t start = static_cast<std::size_t>(f) * fr.hop;
    for (int i = 0; i < fr.win; ++i) {
      cf[i] = clean.samples[start + i] * fr.window[i];
      pf[i] = processed.samples[start + i] * fr.window[i];
    }
    const auto lc = lpc(cf);
    const auto lp = lpc(pf);
    if (!lc || !lp) {
      ++out.skipped;
      continue;
    }
    const double num = toeplitz_quadratic(lp->a, lc->r);
    const double den = toeplitz_quadratic(lc->a, lc->r);
    if (!(num > 0.0 && den > 0.0)) {
      ++out.skipped;
      continue;
    }
    values.push_back(std::log(num / den));
  }
  out.frames = values.size();
  out.value = trimmed_mean(std::move(values), 0.95);
  return out;
}

FrameMeasure wss(const Waveform& clean, const Waveform& processed) {
  require_same_length(clean, processed, "wss");
  const Framing fr = composite_framing(clean);
  int n_fft = 1;
  while (n_fft < 2 * fr.win) n_fft *= 2;
  const int half = n_fft / 2;
  const double nyquist = clean.sample_rate / 2.0;
  const double min_factor = std::exp(-30.0 / (2.0 * 2.303));
  std::vector<std::vector<double>> filters(kCritBands, std::vector<double>(half));
  for (int i = 0; i < kCritBands; ++i) {
    const double f0 = kCentreHz[i] / nyquist * half;
    const double bw = kBandwidthHz[i] / nyquist * half;
    const double norm = std::log(kBandwidthHz[0]) - std::log(kBandwidthHz[i]);
    for (int j = 0; j < half; ++j) {
      const double z = (j - std::floor(f0)) / bw;
      const double v = std::exp(-11.0 * z * z + norm);
      filters[i][j] = v > min_factor ? v : 0.0;
    }
  }
  RealFft fft(n_fft);
  std::vector<double> cf(fr.win), pf(fr.win);
  std::vector<std::complex<double>> cs, ps;
  std::vector<double> values;
  FrameMeasure out;
  for (int f = 0; f < fr.count; ++f) {
    const std::size_t start = static_cast<std::size_t>(f) * fr.hop;
    for (int i = 0; i < fr.win; ++i) {
      cf[i] = clean.samples[start + i] * fr.window[i];
      pf[i] = processed.samples[start + i] * fr.window[i];
    }
    fft.forward(cf, cs);
    fft.forward(pf, ps);
    const BandFrame c = band_frame(cs, filters);
    const BandFrame p = band_frame(ps, filters);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < kCritBands - 1; ++i) {
      const double w = 0.5 * (c.weight[i] + p.weight[i]);
      const double d = c.slope[i] - p.slope[i];
      num += w * d * d;
      den += w;
    }
    values.push_back(num / den);
  }
  out.frames = values.size();
  out.value = trimmed_mean(std::move(values), 0.95);
  return out;
}

double csig_raw(double llr_value, double pesq_value, double wss_value) {
  return 3.093 - 1.029 * llr_value + 0.603 * pesq_value - 0.009 * wss_value;
}

double csig(double llr_value, double pesq_value, double wss_value) {
  return std::clamp(csig_raw(llr_value, pesq_value, wss_value), 1.0, 5.0);
}

}  // namespace mosanet::labels
