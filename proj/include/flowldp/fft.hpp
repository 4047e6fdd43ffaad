#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace flowldp {

// Complex 1-D DFT of fixed length backed by FFTW.
// Forward: X_m = sum_k x_k exp(-2 pi i m k / n). Inverse: unnormalized conjugate.
// Plans are created under a global lock (the FFTW planner is not thread-safe);
// execute() on distinct FftPlan objects is safe concurrently.
class FftPlan {
 public:
  enum class Direction { forward, inverse };

  FftPlan(std::size_t n, Direction dir);
  ~FftPlan();
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  FftPlan(FftPlan&&) noexcept;
  FftPlan& operator=(FftPlan&&) noexcept;

  std::size_t size() const { return n_; }

  // Transforms `in` (zero-padded or truncated to size()) into the returned vector.
  std::vector<std::complex<double>> execute(std::span<const std::complex<double>> in) const;
  std::vector<std::complex<double>> execute_real(std::span<const double> in) const;

 private:
  struct Impl;
  std::size_t n_ = 0;
  std::unique_ptr<Impl> impl_;
};

// Smallest power of two >= n.
std::size_t next_pow2(std::size_t n);

}  // namespace flowldp
