#include "mosanet/common/fft.hpp"

#include <algorithm>
#include <unsupported/Eigen/FFT>

#include "mosanet/common/error.hpp"

namespace mosanet {

struct RealFft::Impl {
  Eigen::FFT<double> fft;
  std::vector<double> time;
  std::vector<std::complex<double>> full;
};

RealFft::RealFft(int n) : n_(n), impl_(std::make_unique<Impl>()) {
  if (n < 2) throw UsageError("FFT size must be at least 2");
  impl_->fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  impl_->time.assign(n, 0.0);
}

RealFft::~RealFft() = default;
RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&&) noexcept = default;

void RealFft::forward(std::span<const double> input, std::vector<std::complex<double>>& out) {
  auto& t = impl_->time;
  const std::size_t n = std::min<std::size_t>(input.size(), t.size());
  std::copy_n(input.begin(), n, t.begin());
  std::fill(t.begin() + static_cast<std::ptrdiff_t>(n), t.end(), 0.0);
  impl_->fft.fwd(out, t);
  out.resize(bins());
}

void RealFft::inverse(std::span<const std::complex<double>> spectrum, std::vector<double>& out) {
  if (static_cast<int>(spectrum.size()) != bins()) throw Error("inverse FFT: wrong bin count");
  impl_->full.assign(spectrum.begin(), spectrum.end());
  impl_->fft.inv(out, impl_->full, n_);
}

}  // namespace mosanet
