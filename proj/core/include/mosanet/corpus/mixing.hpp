#pragma once

#include <array>
#include <cstddef>

#include "mosanet/common/rng.hpp"
#include "mosanet/common/waveform.hpp"

namespace mosanet::corpus {

/// The training corpus grid: -10 dB to 20 dB in 1 dB steps.
std::vector<double> paper_snr_grid_db();

struct MixResult {
  Waveform mixture;
  std::size_t noise_offset = 0;  // start of the noise crop
  double gain = 0.0;             // g applied to the crop
};

/// clean + g * noise[offset, offset + len(clean)), with
/// g = sqrt(P_clean / (P_crop * 10^(snr_db / 10))). P is the mean square over
/// the whole utterance.
MixResult mix_at_snr(const Waveform& clean, const Waveform& noise, double snr_db,
                     std::size_t offset);

/// Same, with the crop offset drawn from `rng`.
MixResult mix_at_snr(const Waveform& clean, const Waveform& noise, double snr_db, Rng& rng);

/// 10 log10(P_clean / P_noise_component) for a mixture built from `clean`.
double measured_snr_db(const Waveform& clean, const Waveform& mixture);

}  // namespace mosanet::corpus
