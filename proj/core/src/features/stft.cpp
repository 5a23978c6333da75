#include "mosanet/features/stft.hpp"

#include <cmath>
#include <complex>
#include <string>

#include "mosanet/common/error.hpp"
#include "mosanet/common/fft.hpp"

namespace mosanet::features {

namespace {
constexpr double kPi = 3.14159265358979323846;

void check_config(const StftConfig& cfg) {
  if (cfg.win_length < 2 || cfg.hop < 1 || cfg.n_fft < cfg.win_length) {
    throw UsageError("invalid STFT configuration");
  }
}
}  // namespace

std::vector<double> make_window(WindowKind kind, int length) {
  std::vector<double> w(static_cast<std::size_t>(length));
  for (int n = 0; n < length; ++n) {
    const double c = std::cos(2.0 * kPi * n / length);
    w[static_cast<std::size_t>(n)] = kind == WindowKind::Hamming ? 0.54 - 0.46 * c : 0.5 - 0.5 * c;
  }
  return w;
}

int frame_count(std::size_t samples, const StftConfig& cfg) {
  if (samples < static_cast<std::size_t>(cfg.win_length)) return 0;
  return 1 + static_cast<int>((samples - cfg.win_length) / cfg.hop);
}

ComplexFrames stft(const Waveform& w, const StftConfig& cfg) {
  check_config(cfg);
  const int frames = frame_count(w.size(), cfg);
  if (frames < 1) {
    throw UsageError("signal of " + std::to_string(w.size()) + " samples is shorter than one " +
                     std::to_string(cfg.win_length) + "-sample window");
  }
  const auto window = make_window(cfg.window, cfg.win_length);
  RealFft fft(cfg.n_fft);
  ComplexFrames out;
  out.config = cfg;
  out.signal_length = w.size();
  out.values.resize(frames, cfg.bins());
  std::vector<double> buf(static_cast<std::size_t>(cfg.win_length));
  std::vector<std::complex<double>> spec;
  for (int t = 0; t < frames; ++t) {
    const std::size_t start = static_cast<std::size_t>(t) * cfg.hop;
    for (int n = 0; n < cfg.win_length; ++n) buf[n] = w.samples[start + n] * window[n];
    fft.forward(buf, spec);
    for (int k = 0; k < cfg.bins(); ++k) out.values(t, k) = spec[k];
  }
  return out;
}

SpectralFrames power_spec(const ComplexFrames& frames) {
  SpectralFrames s;
  s.kind = SpectralKind::PS;
  s.values = frames.values.unaryExpr([](const std::complex<double>& z) { return std::norm(z); });
  return s;
}

SpectralFrames log_power_spec(const ComplexFrames& frames) {
  SpectralFrames s;
  s.kind = SpectralKind::LPS;
  s.values = frames.values.unaryExpr([](const std::complex<double>& z) { return std::log(std::norm(z) + kLogFloor); });
  return s;
}

SpectralFrames ri_features(const ComplexFrames& frames) {
  SpectralFrames s;
  s.kind = SpectralKind::COMPLEX_RI;
  const auto bins = frames.bin_count();
  s.values.resize(frames.frame_count(), 2 * bins);
  s.values.leftCols(bins) = frames.values.real();
  s.values.rightCols(bins) = frames.values.imag();
  return s;
}

Matrix magnitude(const ComplexFrames& frames) { return frames.values.cwiseAbs(); }

Matrix phase(const ComplexFrames& frames) {
  return frames.values.unaryExpr([](const std::complex<double>& z) { return std::arg(z); });
}

namespace {

Waveform overlap_add(const ComplexMatrix& spec, const StftConfig& cfg, std::size_t length) {
  check_config(cfg);
  if (spec.cols() != cfg.bins()) throw UsageError("istft: bin count does not match the STFT configuration");
  const auto frames = static_cast<std::size_t>(spec.rows());
  const std::size_t natural = frames == 0 ? 0 : (frames - 1) * cfg.hop + cfg.win_length;
  const auto window = make_window(cfg.window, cfg.win_length);
  std::vector<double> acc(natural, 0.0), norm(natural, 0.0);
  RealFft fft(cfg.n_fft);
  std::vector<std::complex<double>> bins(static_cast<std::size_t>(cfg.bins()));
  std::vector<double> time;
  for (std::size_t t = 0; t < frames; ++t) {
    for (int k = 0; k < cfg.bins(); ++k) bins[k] = spec(static_cast<Eigen::Index>(t), k);
    fft.inverse(bins, time);
    const std::size_t start = t * cfg.hop;
    for (int n = 0; n < cfg.win_length; ++n) {
      acc[start + n] += time[n] * window[n];
      norm[start + n] += window[n] * window[n];
    }
  }
  Waveform out;
  const std::size_t len = length == 0 ? natural : length;
  out.samples.assign(len, 0.0);
  for (std::size_t i = 0; i < std::min(len, natural); ++i) {
    out.samples[i] = norm[i] > 1e-10 ? acc[i] / norm[i] : 0.0;
  }
  return out;
}

}  // namespace

Waveform istft(const Matrix& mag, const Matrix& ph, const StftConfig& cfg, std::size_t length) {
  if (mag.rows() != ph.rows() || mag.cols() != ph.cols()) {
    throw UsageError("istft: magnitude is " + std::to_string(mag.rows()) + "x" + std::to_string(mag.cols()) +
                     " but phase is " + std::to_string(ph.rows()) + "x" + std::to_string(ph.cols()));
  }
  ComplexMatrix spec(mag.rows(), mag.cols());
  for (Eigen::Index i = 0; i < mag.size(); ++i) spec.data()[i] = std::polar(mag.data()[i], ph.data()[i]);
  return overlap_add(spec, cfg, length);
}

Waveform istft(const ComplexFrames& frames, std::size_t length) {
  return overlap_add(frames.values, frames.config, length);
}

Waveform istft_ri(const SpectralFrames& ri, const StftConfig& cfg, std::size_t length) {
  if (ri.kind != SpectralKind::COMPLEX_RI || ri.bin_count() != 2 * cfg.bins()) {
    throw UsageError("istft_ri: expected stacked real/imaginary frames");
  }
  const int bins = cfg.bins();
  ComplexMatrix spec(ri.frame_count(), bins);
  for (Eigen::Index t = 0; t < spec.rows(); ++t) {
    for (int k = 0; k < bins; ++k) spec(t, k) = {ri.values(t, k), ri.values(t, bins + k)};
  }
  return overlap_add(spec, cfg, length);
}

}  // namespace mosanet::features
