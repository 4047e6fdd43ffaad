#include "flowldp/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "flowldp/error.hpp"
#include "flowldp/fft.hpp"

namespace flowldp {

namespace {

constexpr double kPi = std::numbers::pi;

double interpolate_centered(const std::vector<double>& table, double step, double p) {
  if (table.empty()) return 0.0;
  const double center = 0.5 * static_cast<double>(table.size() - 1);
  const double x = p / step + center;
  if (x < 0.0 || x > static_cast<double>(table.size() - 1)) return 0.0;
  const auto i = static_cast<std::size_t>(std::floor(x));
  if (i + 1 >= table.size()) return table.back();
  const double w = x - static_cast<double>(i);
  return (1.0 - w) * table[i] + w * table[i + 1];
}

}  // namespace

Kernel Kernel::gaussian(double bandwidth) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw InvalidParameter("gaussian kernel: bandwidth must be positive, got " +
                           std::to_string(bandwidth));
  }
  Kernel k;
  k.family_ = KernelFamily::gaussian;
  k.bandwidth_ = bandwidth;
  // int c^2 exp(-p^2/s^2) dp = c^2 s sqrt(pi) = 1
  k.amplitude_ = 1.0 / std::sqrt(bandwidth * std::sqrt(kPi));
  k.l2_norm_ = 1.0;
  return k;
}

Kernel Kernel::tabulated(double grid_step, std::vector<double> values) {
  if (!(grid_step > 0.0) || !std::isfinite(grid_step)) {
    throw InvalidParameter("tabulated kernel: grid_step must be positive");
  }
  if (values.size() < 3 || values.size() % 2 == 0) {
    throw InvalidParameter("tabulated kernel: need an odd number (>= 3) of samples centered at 0");
  }
  double sum_sq = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidParameter("tabulated kernel: non-finite sample");
    sum_sq += v * v;
  }
  const double norm_sq = grid_step * sum_sq;
  if (!(norm_sq > 0.0)) throw InvalidParameter("tabulated kernel: all samples are zero");
  const double scale = 1.0 / std::sqrt(norm_sq);
  double vmax = 0.0;
  for (double& v : values) {
    v *= scale;
    vmax = std::max(vmax, std::abs(v));
  }
  if (std::abs(values.front()) > 1e-12 * vmax || std::abs(values.back()) > 1e-12 * vmax) {
    throw InvalidParameter("tabulated kernel: samples must decay below 1e-12 at the table boundary");
  }

  Kernel k;
  k.family_ = KernelFamily::tabulated;
  k.grid_step_ = grid_step;
  k.table_ = std::move(values);

  const std::size_t n = k.table_.size();
  const double c = 0.5 * static_cast<double>(n - 1);
  double sum = 0.0;
  double second = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = (static_cast<double>(i) - c) * grid_step;
    sum += k.table_[i] * k.table_[i];
    second += p * p * k.table_[i] * k.table_[i];
  }
  k.l2_norm_ = grid_step * sum;
  k.bandwidth_ = std::sqrt(second / sum);

  k.correlation_table_.assign(2 * n - 1, 0.0);
  for (std::size_t lag = 0; lag < n; ++lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) acc += k.table_[i] * k.table_[i + lag];
    acc *= grid_step;
    k.correlation_table_[n - 1 + lag] = acc;
    k.correlation_table_[n - 1 - lag] = acc;
  }
  return k;
}

double Kernel::support_radius() const {
  if (family_ == KernelFamily::gaussian) {
    return bandwidth_ * std::sqrt(2.0 * std::log(1e16));
  }
  return 0.5 * static_cast<double>(table_.size() - 1) * grid_step_;
}

double Kernel::operator()(double p) const {
  if (family_ == KernelFamily::gaussian) {
    const double z = p / bandwidth_;
    return amplitude_ * std::exp(-0.5 * z * z);
  }
  return interpolate_centered(table_, grid_step_, p);
}

double Kernel::correlation(double r) const {
  if (family_ == KernelFamily::gaussian) {
    const double z = r / bandwidth_;
    return std::exp(-0.25 * z * z);
  }
  return interpolate_centered(correlation_table_, grid_step_, r);
}

std::complex<double> Kernel::transform(double lambda) const {
  if (family_ == KernelFamily::gaussian) {
    const double z = bandwidth_ * lambda;
    return {amplitude_ * bandwidth_ * std::sqrt(2.0 * kPi) * std::exp(-0.5 * z * z), 0.0};
  }
  const double c = 0.5 * static_cast<double>(table_.size() - 1);
  double re = 0.0;
  double im = 0.0;
  for (std::size_t i = 0; i < table_.size(); ++i) {
    const double p = (static_cast<double>(i) - c) * grid_step_;
    re += table_[i] * std::cos(lambda * p);
    im -= table_[i] * std::sin(lambda * p);
  }
  return {grid_step_ * re, grid_step_ * im};
}

Kernel make_gaussian_kernel(double bandwidth) { return Kernel::gaussian(bandwidth); }

Kernel make_tabulated_kernel(double grid_step, std::vector<double> values) {
  return Kernel::tabulated(grid_step, std::move(values));
}

double correlation(const Kernel& k, double r) { return k.correlation(r); }

std::vector<std::complex<double>> fourier_transform(const Kernel& k,
                                                    std::span<const double> freq_grid) {
  double scale = 0.0;
  for (double l : freq_grid) {
    if (!std::isfinite(l)) throw InvalidParameter("fourier_transform: non-finite frequency");
    scale = std::max(scale, std::abs(l));
  }
  const std::size_t n = freq_grid.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(freq_grid[i] + freq_grid[n - 1 - i]) > 1e-12 * std::max(scale, 1.0)) {
      throw InvalidParameter("fourier_transform: frequency grid must be symmetric about 0");
    }
  }
  std::vector<std::complex<double>> out;
  out.reserve(n);
  for (double l : freq_grid) out.push_back(k.transform(l));
  return out;
}

FrequencyGrid frequency_grid(const Kernel& k, std::size_t points, double floor) {
  if (points < 3) throw InvalidParameter("frequency_grid: need at least 3 points");
  if (!(floor > 0.0)) throw InvalidParameter("frequency_grid: floor must be positive");
  double lambda_max = 0.0;
  if (k.family() == KernelFamily::gaussian) {
    const double peak = std::abs(k.transform(0.0));
    lambda_max = std::sqrt(2.0 * std::log(peak / floor)) / k.bandwidth();
  } else {
    // Largest frequency (below Nyquist) where |F phi| still reaches the floor.
    const double nyquist = kPi / k.grid_step();
    const std::size_t probes = 4096;
    lambda_max = nyquist;
    for (std::size_t i = probes; i-- > 0;) {
      const double l = nyquist * static_cast<double>(i) / static_cast<double>(probes);
      if (std::abs(k.transform(l)) >= floor) {
        lambda_max = std::min(nyquist, nyquist * static_cast<double>(i + 1) /
                                           static_cast<double>(probes));
        break;
      }
    }
  }
  FrequencyGrid g;
  g.lambda_max = lambda_max;
  g.step = 2.0 * lambda_max / static_cast<double>(points - 1);
  g.lambda.resize(points);
  for (std::size_t i = 0; i < points; ++i) {
    g.lambda[i] = -lambda_max + g.step * static_cast<double>(i);
  }
  // exact symmetry
  for (std::size_t i = 0; i < points / 2; ++i) g.lambda[points - 1 - i] = -g.lambda[i];
  if (points % 2 == 1) g.lambda[points / 2] = 0.0;
  return g;
}

KernelFactor KernelFactor::gaussian(double amplitude, double sigma) {
  KernelFactor f;
  f.gaussian_ = true;
  f.amplitude_ = amplitude;
  f.sigma_ = sigma;
  return f;
}

KernelFactor KernelFactor::tabulated(double grid_step, std::vector<double> values) {
  KernelFactor f;
  f.gaussian_ = false;
  f.grid_step_ = grid_step;
  f.table_ = std::move(values);
  return f;
}

double KernelFactor::operator()(double p) const {
  if (gaussian_) {
    const double z = p / sigma_;
    return amplitude_ * std::exp(-0.5 * z * z);
  }
  return interpolate_centered(table_, grid_step_, p);
}

double convolution_residual(const KernelFactors& f, const Kernel& k,
                            std::span<const double> points, double step, double radius) {
  const auto m = static_cast<long>(std::ceil(radius / step));
  double worst = 0.0;
  for (double r : points) {
    double acc = 0.0;
    for (long j = -m; j <= m; ++j) {
      const double q = static_cast<double>(j) * step;
      acc += f.psi1(r - q) * f.psi2(q);
    }
    worst = std::max(worst, std::abs(step * acc - k(r)));
  }
  return worst;
}

KernelFactors factorize(const Kernel& k) {
  if (k.family() == KernelFamily::gaussian) {
    // F phi = A exp(-s^2 l^2 / 2), so F psi = sqrt(A) exp(-s^2 l^2 / 4): a gaussian of
    // width s / sqrt(2).
    const double s = k.bandwidth();
    const double peak = k.transform(0.0).real();
    const double sigma = s / std::numbers::sqrt2;
    const double amp = std::sqrt(peak) / (sigma * std::sqrt(2.0 * kPi));
    KernelFactors out{KernelFactor::gaussian(amp, sigma), KernelFactor::gaussian(amp, sigma), 0.0};
    std::vector<double> check;
    for (int i = -20; i <= 20; ++i) check.push_back(0.25 * s * i);
    out.residual = convolution_residual(out, k, check, s / 32.0, 12.0 * s);
    return out;
  }

  const auto& table = k.table();
  const std::size_t n = table.size();
  const std::size_t c = (n - 1) / 2;
  const double h = k.grid_step();
  const std::size_t len = next_pow2(4 * n);

  std::vector<std::complex<double>> wrapped(len, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const long off = static_cast<long>(i) - static_cast<long>(c);
    const std::size_t idx = off >= 0 ? static_cast<std::size_t>(off)
                                     : len - static_cast<std::size_t>(-off);
    wrapped[idx] = table[i];
  }
  const auto spectrum = FftPlan(len, FftPlan::Direction::forward).execute(wrapped);
  double peak = 0.0;
  for (const auto& v : spectrum) peak = std::max(peak, std::abs(v));
  std::vector<std::complex<double>> root(len);
  for (std::size_t m = 0; m < len; ++m) {
    const double re = h * spectrum[m].real();
    const double im = h * spectrum[m].imag();
    if (std::abs(im) > 1e-10 * h * peak) {
      throw FactorizationUnsupported("factorize: kernel transform is not real (kernel not even)");
    }
    if (re < -1e-10 * h * peak) {
      throw FactorizationUnsupported("factorize: kernel transform changes sign");
    }
    root[m] = std::sqrt(std::max(re, 0.0));
  }
  const auto psi_wrapped = FftPlan(len, FftPlan::Direction::inverse).execute(root);
  const double norm = 1.0 / (static_cast<double>(len) * h);

  // Centered table of odd length len - 1; the wrap-around sample at -len/2 is dropped.
  const std::size_t half = len / 2 - 1;
  std::vector<double> psi(2 * half + 1);
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const long off = static_cast<long>(i) - static_cast<long>(half);
    const std::size_t idx = off >= 0 ? static_cast<std::size_t>(off)
                                     : len - static_cast<std::size_t>(-off);
    psi[i] = psi_wrapped[idx].real() * norm;
  }

  // Discrete linear convolution at the kernel's own grid points.
  double residual = 0.0;
  const long hc = static_cast<long>(half);
  for (std::size_t i = 0; i < n; ++i) {
    const long target = static_cast<long>(i) - static_cast<long>(c);
    double acc = 0.0;
    for (long j = -hc; j <= hc; ++j) {
      const long other = target - j;
      if (other < -hc || other > hc) continue;
      acc += psi[static_cast<std::size_t>(j + hc)] * psi[static_cast<std::size_t>(other + hc)];
    }
    residual = std::max(residual, std::abs(h * acc - table[i]));
  }
  if (residual > 1e-8) {
    throw FactorizationUnsupported("factorize: convolution check failed (residual " +
                                   std::to_string(residual) + ")");
  }
  KernelFactor psi_factor = KernelFactor::tabulated(h, std::move(psi));
  return {psi_factor, psi_factor, residual};
}

}  // namespace flowldp
