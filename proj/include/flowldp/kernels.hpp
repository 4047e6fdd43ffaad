#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace flowldp {

enum class KernelFamily { gaussian, tabulated };

/// Smoothing function phi of the correlated flow, normalized so that
/// the integral of phi^2 is one. Immutable after construction.
///
/// Fourier convention: F f(lambda) = int f(p) exp(-i lambda p) dp, with the
/// inverse carrying 1/(2 pi). Parseval then reads (1/2pi) int |Ff|^2 = int f^2.
///
/// Gaussian kernels have closed forms for phi, its correlation and transform.
/// Tabulated kernels are samples on a uniform grid centered at p = 0 (odd
/// count); they are evaluated by linear interpolation and rescaled at
/// construction to unit L2 norm under the grid quadrature.
class Kernel {
 public:
  static Kernel gaussian(double bandwidth);
  static Kernel tabulated(double grid_step, std::vector<double> values);

  KernelFamily family() const { return family_; }
  // Gaussian scale, or the RMS width of phi^2 for tabulated kernels.
  double bandwidth() const { return bandwidth_; }
  double grid_step() const { return grid_step_; }
  const std::vector<double>& table() const { return table_; }
  double l2_norm() const { return l2_norm_; }
  // Radius outside which phi is below 1e-16 * phi_max (gaussian) or identically
  // zero (tabulated).
  double support_radius() const;

  double operator()(double p) const;
  // Phi_corr(r) = int phi(r - p) phi(p) dp.
  double correlation(double r) const;
  std::complex<double> transform(double lambda) const;

 private:
  Kernel() = default;

  KernelFamily family_ = KernelFamily::gaussian;
  double bandwidth_ = 1.0;
  double amplitude_ = 0.0;  // gaussian normalization constant
  double grid_step_ = 0.0;
  std::vector<double> table_;
  std::vector<double> correlation_table_;  // lags -(N-1)..(N-1)
  double l2_norm_ = 1.0;
};

Kernel make_gaussian_kernel(double bandwidth);
Kernel make_tabulated_kernel(double grid_step, std::vector<double> values);

double correlation(const Kernel& k, double r);

// F phi at each frequency. The grid must be finite and symmetric about 0.
std::vector<std::complex<double>> fourier_transform(const Kernel& k,
                                                    std::span<const double> freq_grid);

// Symmetric uniform frequency grid whose extent is the point where |F phi|
// drops below `floor` (capped at the table Nyquist frequency for tabulated kernels).
struct FrequencyGrid {
  double lambda_max = 0.0;
  double step = 0.0;
  std::vector<double> lambda;
};

FrequencyGrid frequency_grid(const Kernel& k, std::size_t points = 4096, double floor = 1e-12);

// One convolution factor psi: a gaussian a*exp(-p^2/(2 sigma^2)) or a centered table.
class KernelFactor {
 public:
  static KernelFactor gaussian(double amplitude, double sigma);
  static KernelFactor tabulated(double grid_step, std::vector<double> values);

  double operator()(double p) const;
  bool is_gaussian() const { return gaussian_; }
  double amplitude() const { return amplitude_; }
  double sigma() const { return sigma_; }
  double grid_step() const { return grid_step_; }
  const std::vector<double>& table() const { return table_; }

 private:
  bool gaussian_ = true;
  double amplitude_ = 0.0;
  double sigma_ = 1.0;
  double grid_step_ = 0.0;
  std::vector<double> table_;
};

// phi = psi1 * psi2 with psi1 = psi2 = psi and F psi = (F phi)^{1/2}.
struct KernelFactors {
  KernelFactor psi1;
  KernelFactor psi2;
  double residual = 0.0;  // sup |psi1 * psi2 - phi| on the kernel's check grid
};

// Throws FactorizationUnsupported if F phi takes negative (or non-real) values.
KernelFactors factorize(const Kernel& k);

// Sup-norm residual of (psi1 * psi2)(r) - phi(r) over `points`, convolution by
// trapezoid quadrature with spacing `step` over [-radius, radius].
double convolution_residual(const KernelFactors& f, const Kernel& k,
                            std::span<const double> points, double step, double radius);

}  // namespace flowldp
