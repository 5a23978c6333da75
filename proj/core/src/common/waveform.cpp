#include "mosanet/common/waveform.hpp"

#include <cmath>
#include <string>

#include "mosanet/common/error.hpp"

namespace mosanet {

void validate(const Waveform& w) {
  if (w.sample_rate != kSampleRate) {
    throw UsageError("sample rate " + std::to_string(w.sample_rate) +
                     " Hz, expected 16000 Hz");
  }
  if (w.samples.empty()) throw UsageError("empty waveform");
  for (double s : w.samples) {
    if (!std::isfinite(s)) throw UsageError("waveform contains non-finite samples");
  }
}

double power(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

}  // namespace mosanet
