#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace strokelab::dsp {

// Iterative radix-2 FFT plan for a fixed power-of-two length. A plan owns a
// scratch buffer, so each thread needs its own.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);

  std::size_t size() const noexcept { return n_; }

  // In-place forward transform, X[k] = sum_n x[n] exp(-2 pi i k n / N).
  void forward(std::span<std::complex<double>> data) const;

  // Transforms two real sequences with one complex FFT. Writes the N/2 + 1
  // non-negative-frequency bins of each.
  void forward_real_pair(std::span<const double> a, std::span<const double> b,
                         std::span<std::complex<double>> out_a,
                         std::span<std::complex<double>> out_b) const;

  void forward_real(std::span<const double> a, std::span<std::complex<double>> out) const;

 private:
  std::size_t n_;
  std::vector<std::size_t> bitrev_;
  std::vector<std::complex<double>> twiddles_;  // exp(-2 pi i k / N), k < N/2
  mutable std::vector<std::complex<double>> scratch_;
};

bool is_power_of_two(std::size_t n) noexcept;

}  // namespace strokelab::dsp
