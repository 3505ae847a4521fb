#include "strokelab/fft.hpp"

#include <cmath>
#include <numbers>

#include "strokelab/error.hpp"

namespace strokelab::dsp {

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

FftPlan::FftPlan(std::size_t n) : n_(n), bitrev_(n), twiddles_(n / 2), scratch_(n) {
  if (!is_power_of_two(n) || n < 2) throw Error(Errc::InvalidArgument, "FFT length must be a power of two >= 2");
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < n) ++bits;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
    bitrev_[i] = r;
  }
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    twiddles_[k] = {std::cos(angle), std::sin(angle)};
  }
}

void FftPlan::forward(std::span<std::complex<double>> data) const {
  if (data.size() != n_) throw Error(Errc::InvalidArgument, "FFT buffer length mismatch");
  for (std::size_t i = 0; i < n_; ++i) {
    if (i < bitrev_[i]) std::swap(data[i], data[bitrev_[i]]);
  }
  for (std::size_t len = 2; len <= n_; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n_ / len;
    for (std::size_t start = 0; start < n_; start += len) {
      for (std::size_t j = 0; j < half; ++j) {
        const auto w = twiddles_[j * stride];
        const auto u = data[start + j];
        const auto v = data[start + j + half] * w;
        data[start + j] = u + v;
        data[start + j + half] = u - v;
      }
    }
  }
}

void FftPlan::forward_real_pair(std::span<const double> a, std::span<const double> b,
                                std::span<std::complex<double>> out_a,
                                std::span<std::complex<double>> out_b) const {
  const std::size_t half = n_ / 2;
  if (a.size() != n_ || b.size() != n_ || out_a.size() < half + 1 || out_b.size() < half + 1) {
    throw Error(Errc::InvalidArgument, "real-pair FFT buffer length mismatch");
  }
  for (std::size_t i = 0; i < n_; ++i) scratch_[i] = {a[i], b[i]};
  forward(scratch_);
  // With z = a + i b: A[k] = (Z[k] + conj Z[N-k]) / 2, B[k] = (Z[k] - conj Z[N-k]) / 2i.
  for (std::size_t k = 0; k <= half; ++k) {
    const auto zk = scratch_[k];
    const auto zn = std::conj(scratch_[(n_ - k) % n_]);
    out_a[k] = 0.5 * (zk + zn);
    const auto d = zk - zn;
    out_b[k] = {0.5 * d.imag(), -0.5 * d.real()};
  }
}

void FftPlan::forward_real(std::span<const double> a, std::span<std::complex<double>> out) const {
  if (a.size() != n_ || out.size() < n_ / 2 + 1) throw Error(Errc::InvalidArgument, "real FFT buffer length mismatch");
  for (std::size_t i = 0; i < n_; ++i) scratch_[i] = {a[i], 0.0};
  forward(scratch_);
  for (std::size_t k = 0; k <= n_ / 2; ++k) out[k] = scratch_[k];
}

}  // namespace strokelab::dsp
