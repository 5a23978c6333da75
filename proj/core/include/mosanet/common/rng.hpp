#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace mosanet {

/// Seeded generator with portable distributions. The standard library's
/// distributions are implementation-defined, so everything that ends up in a
/// manifest, checkpoint or test vector is drawn through these helpers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }
  template <typename T>
  void shuffle(std::vector<T>& items) {
    shuffle(std::span<T>(items));
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// FNV-1a, used for deriving per-name seeds and config hashes.
std::uint64_t fnv1a(std::string_view data, std::uint64_t basis = 1469598103934665603ULL);

/// Independent stream for a named consumer of a master seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name);

}  // namespace mosanet
