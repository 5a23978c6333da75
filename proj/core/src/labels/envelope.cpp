#include "mosanet/labels/envelope.hpp"

#include <cmath>

#include "mosanet/common/csv.hpp"
#include "mosanet/common/error.hpp"

namespace mosanet::labels {

namespace {

using cd = std::complex<double>;

// Upper-half-plane poles of the normalized analog Butterworth prototype.
std::vector<cd> prototype_upper_poles(int order) {
  std::vector<cd> poles;
  for (int k = 0; k < order; ++k) {
    const double theta = M_PI * (2.0 * k + order + 1) / (2.0 * order);
    const cd p = std::polar(1.0, theta);
    if (p.imag() > 1e-12) poles.push_back(p);
  }
  if (order % 2 != 0) throw UsageError("butterworth: odd orders are not supported");
  return poles;
}

double prewarp(double hz, double fs) { return 2.0 * fs * std::tan(M_PI * hz / fs); }

cd bilinear(cd s, double fs) { return (2.0 * fs + s) / (2.0 * fs - s); }

Biquad section(cd zpole, double b0, double b1, double b2) {
  Biquad q;
  q.b0 = b0;
  q.b1 = b1;
  q.b2 = b2;
  q.a1 = -2.0 * zpole.real();
  q.a2 = std::norm(zpole);
  return q;
}

void normalize(SosFilter& f, double hz, double fs) {
  const double g = std::abs(frequency_response(f, hz, fs));
  f.front().b0 /= g;
  f.front().b1 /= g;
  f.front().b2 /= g;
}

}  // namespace

SosFilter butter_lowpass(int order, double cutoff_hz, double sample_rate) {
  if (!(cutoff_hz > 0 && cutoff_hz < sample_rate / 2)) throw UsageError("butter_lowpass: cutoff out of range");
  const double wc = prewarp(cutoff_hz, sample_rate);
  SosFilter f;
  for (cd p : prototype_upper_poles(order)) f.push_back(section(bilinear(p * wc, sample_rate), 1.0, 2.0, 1.0));
  normalize(f, 0.0, sample_rate);
  return f;
}

SosFilter butter_bandpass(int order, double low_hz, double high_hz, double sample_rate) {
  if (!(low_hz > 0 && low_hz < high_hz && high_hz < sample_rate / 2)) {
    throw UsageError("butter_bandpass: band out of range");
  }
  const double w1 = prewarp(low_hz, sample_rate);
  const double w2 = prewarp(high_hz, sample_rate);
  const double w0 = std::sqrt(w1 * w2);
  const double bw = w2 - w1;
  SosFilter f;
  for (cd p : prototype_upper_poles(order)) {
    const cd half = p * bw / 2.0;
    const cd root = std::sqrt(half * half - w0 * w0);
    for (cd s : {half + root, half - root}) f.push_back(section(bilinear(s, sample_rate), 1.0, 0.0, -1.0));
  }
  // Unit gain at the digital image of the analog centre frequency.
  const double centre_hz = std::atan(w0 / (2.0 * sample_rate)) * sample_rate / M_PI;
  normalize(f, centre_hz, sample_rate);
  return f;
}

std::complex<double> frequency_response(const SosFilter& f, double hz, double sample_rate) {
  const cd z1 = std::polar(1.0, -2.0 * M_PI * hz / sample_rate);
  const cd z2 = z1 * z1;
  cd h = 1.0;
  for (const auto& q : f) h *= (q.b0 + q.b1 * z1 + q.b2 * z2) / (1.0 + q.a1 * z1 + q.a2 * z2);
  return h;
}

std::vector<double> sos_filter(const SosFilter& f, const std::vector<double>& x) {
  std::vector<double> y = x;
  for (const auto& q : f) {
    double s1 = 0.0, s2 = 0.0;
    for (double& v : y) {
      const double in = v;
      const double out = q.b0 * in + s1;
      s1 = q.b1 * in - q.a1 * out + s2;
      s2 = q.b2 * in - q.a2 * out;
      v = out;
    }
  }
  return y;
}

EnvelopeSeries envelope_band2(const Waveform& w) {
  validate(w);
  if (w.size() < static_cast<std::size_t>(w.sample_rate / 10)) {
    throw UsageError("envelope_band2: signal shorter than 100 ms");
  }
  static const SosFilter band = butter_bandpass(4, 457.0, 1202.0, kSampleRate);
  static const SosFilter smooth = butter_lowpass(4, 50.0, kSampleRate);
  std::vector<double> y = sos_filter(band, w.samples);
  for (double& v : y) v = std::abs(v);
  y = sos_filter(smooth, y);
  EnvelopeSeries e;
  const int step = w.sample_rate / 100;
  for (std::size_t i = 0; i < y.size(); i += step) e.values.push_back(std::max(0.0, y[i]));
  return e;
}

void write_envelope_csv(const std::filesystem::path& path, const EnvelopeSeries& e) {
  CsvWriter csv({"time_s", "value"});
  for (std::size_t i = 0; i < e.values.size(); ++i) {
    csv.add_row({format_double(static_cast<double>(i) / e.frame_rate), format_double(e.values[i])});
  }
  csv.write(path);
}

}  // namespace mosanet::labels
