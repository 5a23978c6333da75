#pragma once

#include <filesystem>

#include "mosanet/common/waveform.hpp"

namespace mosanet::corpus {

/// Reads a 16-bit linear PCM mono 16 kHz WAV file; samples scaled to [-1, 1).
/// Rejects other sample rates and channel counts instead of converting them.
Waveform load_waveform(const std::filesystem::path& path);

/// Writes 16-bit PCM, clipping to the representable range.
void save_waveform(const std::filesystem::path& path, const Waveform& w);

/// Writes an arbitrary PCM16 file; only used to produce rejectable inputs in
/// tests and tooling.
void save_pcm16(const std::filesystem::path& path, std::span<const double> interleaved,
                int sample_rate, int channels);

}  // namespace mosanet::corpus
