#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace mosanet {

/// Real-input forward / Hermitian-input inverse FFT of a fixed size.
/// Not thread-safe; use one instance per thread.
class RealFft {
 public:
  explicit RealFft(int n);
  ~RealFft();
  RealFft(RealFft&&) noexcept;
  RealFft& operator=(RealFft&&) noexcept;

  int size() const { return n_; }
  int bins() const { return n_ / 2 + 1; }

  /// `input` may be shorter than n; it is zero-padded.
  void forward(std::span<const double> input, std::vector<std::complex<double>>& out);
  /// `spectrum` holds n/2+1 bins; output has n samples, scaled by 1/n.
  void inverse(std::span<const std::complex<double>> spectrum, std::vector<double>& out);

 private:
  struct Impl;
  int n_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace mosanet
