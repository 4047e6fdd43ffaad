#include "flowldp/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <mutex>

#include "flowldp/error.hpp"

namespace flowldp {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct FftPlan::Impl {
  fftw_complex* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan plan = nullptr;

  ~Impl() {
    std::lock_guard lock(planner_mutex());
    if (plan != nullptr) fftw_destroy_plan(plan);
    if (in != nullptr) fftw_free(in);
    if (out != nullptr) fftw_free(out);
  }
};

FftPlan::FftPlan(std::size_t n, Direction dir) : n_(n), impl_(std::make_unique<Impl>()) {
  if (n == 0) throw InvalidParameter("FftPlan: zero length");
  std::lock_guard lock(planner_mutex());
  impl_->in = fftw_alloc_complex(n);
  impl_->out = fftw_alloc_complex(n);
  impl_->plan = fftw_plan_dft_1d(static_cast<int>(n), impl_->in, impl_->out,
                                 dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD,
                                 FFTW_ESTIMATE);
}

FftPlan::~FftPlan() = default;
FftPlan::FftPlan(FftPlan&&) noexcept = default;
FftPlan& FftPlan::operator=(FftPlan&&) noexcept = default;

std::vector<std::complex<double>> FftPlan::execute(
    std::span<const std::complex<double>> in) const {
  // fftw_execute_dft keeps the shared plan re-entrant; scratch buffers are per call.
  fftw_complex* src = fftw_alloc_complex(n_);
  fftw_complex* dst = fftw_alloc_complex(n_);
  std::memset(src, 0, sizeof(fftw_complex) * n_);
  const std::size_t m = std::min(n_, in.size());
  for (std::size_t k = 0; k < m; ++k) {
    src[k][0] = in[k].real();
    src[k][1] = in[k].imag();
  }
  fftw_execute_dft(impl_->plan, src, dst);
  std::vector<std::complex<double>> result(n_);
  for (std::size_t k = 0; k < n_; ++k) result[k] = {dst[k][0], dst[k][1]};
  fftw_free(src);
  fftw_free(dst);
  return result;
}

std::vector<std::complex<double>> FftPlan::execute_real(std::span<const double> in) const {
  std::vector<std::complex<double>> c(in.begin(), in.end());
  return execute(c);
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace flowldp
