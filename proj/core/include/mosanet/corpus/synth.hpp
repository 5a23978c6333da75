#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mosanet/common/waveform.hpp"

namespace mosanet::corpus {

/// Speech-like test signal: voiced syllables (harmonic series with a gliding
/// pitch and two resonances) separated by short pauses, peak near 0.5.
Waveform synth_speech(std::uint64_t seed, double duration_s);

/// "white", "pink", "babble" (sum of four synth_speech talkers) or "hum"
/// (50 Hz harmonics).
Waveform synth_noise(const std::string& kind, std::uint64_t seed, double duration_s);
std::vector<std::string> synth_noise_kinds();

}  // namespace mosanet::corpus
