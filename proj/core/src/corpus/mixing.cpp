#include "mosanet/corpus/mixing.hpp"

#include <cmath>
#include <string>

#include "mosanet/common/error.hpp"

namespace mosanet::corpus {

std::vector<double> paper_snr_grid_db() {
  std::vector<double> grid;
  for (int s = -10; s <= 20; ++s) grid.push_back(static_cast<double>(s));
  return grid;
}

MixResult mix_at_snr(const Waveform& clean, const Waveform& noise, double snr_db,
                     std::size_t offset) {
  validate(clean);
  validate(noise);
  if (!std::isfinite(snr_db)) throw UsageError("SNR must be finite");
  if (noise.size() < clean.size()) {
    throw UsageError("noise (" + std::to_string(noise.size()) +
                     " samples) shorter than clean utterance (" + std::to_string(clean.size()) + ")");
  }
  if (offset + clean.size() > noise.size()) throw UsageError("noise crop out of range");
  const double p_clean = power(clean.samples);
  if (p_clean <= 0.0) throw UsageError("clean utterance has zero power");
  const std::span<const double> crop(noise.samples.data() + offset, clean.size());
  const double p_noise = power(crop);
  if (p_noise <= 0.0) throw UsageError("degenerate noise: zero-power crop at offset " + std::to_string(offset));

  MixResult r;
  r.noise_offset = offset;
  r.gain = std::sqrt(p_clean / (p_noise * std::pow(10.0, snr_db / 10.0)));
  r.mixture.samples.resize(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    r.mixture.samples[i] = clean.samples[i] + r.gain * crop[i];
  }
  return r;
}

MixResult mix_at_snr(const Waveform& clean, const Waveform& noise, double snr_db, Rng& rng) {
  if (noise.size() < clean.size()) return mix_at_snr(clean, noise, snr_db, std::size_t{0});
  const std::size_t slack = noise.size() - clean.size();
  return mix_at_snr(clean, noise, snr_db, static_cast<std::size_t>(rng.below(slack + 1)));
}

double measured_snr_db(const Waveform& clean, const Waveform& mixture) {
  if (clean.size() != mixture.size()) throw UsageError("length mismatch");
  double pc = 0.0, pn = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double n = mixture.samples[i] - clean.samples[i];
    pc += clean.samples[i] * clean.samples[i];
    pn += n * n;
  }
  return 10.0 * std::log10(pc / pn);
}

}  // namespace mosanet::corpus
