#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mosanet/corpus/mixing.hpp"
#include "mosanet/corpus/synth.hpp"
#include "mosanet/labels/metrics.hpp"
#include "mosanet/training/train.hpp"

namespace toy {

using namespace mosanet;

struct Utterance {
  std::string id;
  Waveform clean;
  Waveform noisy;
  double snr_db = 0.0;
};

// SNRs spread over [-10, 21] dB, white and pink noise alternating.
inline std::vector<Utterance> noisy_set(int n, double seconds, std::uint64_t seed) {
  std::vector<Utterance> out;
  for (int i = 0; i < n; ++i) {
    Utterance u;
    u.id = "toy" + std::to_string(i);
    u.clean = corpus::synth_speech(derive_seed(seed, u.id), seconds);
    const auto noise = corpus::synth_noise(i % 2 ? "pink" : "white", derive_seed(seed, u.id + ".noise"), seconds);
    u.snr_db = -10.0 + 31.0 * i / std::max(1, n - 1);
    u.noisy = corpus::mix_at_snr(u.clean, noise, u.snr_db, 0).mixture;
    out.push_back(std::move(u));
  }
  return out;
}

// Stand-in for PESQ: smooth and increasing in SNR, range (1, 4.5).
inline double quality_proxy(double snr_db) { return 1.0 + 3.5 / (1.0 + std::exp(-0.2 * (snr_db - 5.0))); }

inline std::vector<training::LabeledUtterance> labeled(const std::vector<Utterance>& set,
                                                       const assessor::Assessor& model) {
  const auto extractor = model.make_extractor();
  std::vector<training::LabeledUtterance> out;
  for (const auto& u : set) {
    training::LabeledUtterance l;
    l.inputs = extractor.extract(u.noisy, u.id);
    l.truth[assessor::Task::Q] = quality_proxy(u.snr_db);
    l.truth[assessor::Task::I] = labels::stoi(u.clean, u.noisy);
    l.truth[assessor::Task::D] = labels::sdi(u.clean, u.noisy);
    out.push_back(std::move(l));
  }
  return out;
}

inline void fit_normalization(assessor::Assessor& model, const std::vector<training::LabeledUtterance>& data) {
  std::vector<const features::FeatureInputs*> in;
  for (const auto& d : data) in.push_back(&d.inputs);
  model.fit_normalization(in);
}

}  // namespace toy
