#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "flowldp/flow_sim.hpp"
#include "flowldp/kernels.hpp"
#include "flowldp/pathmaps.hpp"

namespace flowldp {

enum class InfiniteReason {
  wrong_start,
  not_in_image_of_map,
  non_square_integrable_derivative,
  fourier_divergence,
};

std::string_view to_string(InfiniteReason r);

/// Extended nonnegative real: a finite value, or +infinity with a reason.
class RateValue {
 public:
  static RateValue finite(double v);
  static RateValue infinite(InfiniteReason r) { return RateValue(r); }

  bool is_finite() const { return !reason_; }
  // +infinity when not finite.
  double value() const;
  std::optional<InfiniteReason> reason() const { return reason_; }

 private:
  explicit RateValue(double v) : value_(v) {}
  explicit RateValue(InfiniteReason r) : reason_(r) {}
  double value_ = 0.0;
  std::optional<InfiniteReason> reason_;
};

/// Field h(u_i, t_j) on a uniform spatial grid u and a uniform time grid on [0, 1].
struct SpatialField {
  std::vector<double> u;
  std::vector<double> times;
  Eigen::MatrixXd values;  // rows: u, columns: t
};

// (1/4pi) int_0^1 int |F h'(., t)(lambda) / F phi(lambda)|^2 dlambda dt.
// Requires h(., 0) = identity; the spatial step must resolve the kernel's frequency grid.
RateValue rate_gaussian_field(const Kernel& k, const SpatialField& h);

// (1/4pi t) int |F g / F phi|^2 dlambda for a displacement profile g on a uniform grid.
RateValue rate_fixed_time(const Kernel& k, std::span<const double> u, std::span<const double> g,
                          double t);

// Rate of the flow itself, with velocity v(x, t) = h'(h^{-1}(x, t), t). F v is taken
// through the substitution x = h(u, t), so v is never resampled; beyond the outermost
// particles v is extended with the kernel's own decay. Particles should be dense
// (spacing ~0.1 bandwidth) and span the region where the flow moves.
RateValue rate_flow(const Kernel& k, const FlowPath& h);

// (1/2) int |g'|^2 for paths that start at `start` and are fixed by the stopping map.
RateValue rate_stopped(const PiecewiseLinearPath& g, const HittingSet& b,
                       const Eigen::VectorXd& start);

// Coalescing n-point rate: (1/2) sum_k int_0^{tau_k} f_k'^2, tau_0 = 1. Rows of f
// are the particles; row k must start at starts[k].
RateValue rate_npoint(const PiecewiseLinearPath& f, std::span<const double> starts);

struct DyadicRates {
  std::vector<RateValue> levels;  // I_1 .. I_nmax
  std::vector<double> running_max;
  RateValue sup = RateValue::finite(0.0);
  bool nondecreasing = true;
};

// Level n uses the skeleton rows k * 2^(L - n); requires n_max <= skeleton level L.
DyadicRates rate_dyadic(const ForestSkeleton& skeleton, std::size_t n_max);

/// Spectral charge of one profile: int_{|lambda| <= lambda_max} |F g / F phi|^2 dlambda,
/// plus the part from the top octave [lambda_max / 2, lambda_max]. Rates cut the
/// integral where |F phi| < 1e-8 (beyond it rounding noise dominates); a top octave
/// holding more than 1% of the total is reported as fourier_divergence.
struct SpectralEnergy {
  double total = 0.0;
  double top_octave = 0.0;
};

SpectralEnergy spectral_energy(const Kernel& k, double step, std::span<const double> g);

// Dirichlet energy sum (df)^2 / dt on the grid and on every other grid point.
struct EnergyCheck {
  double fine = 0.0;
  double coarse = 0.0;
  bool stable = true;  // |fine - coarse| <= 0.1 max + 1e-12, or grid too short to judge
};

// Grids with fewer than kMinEnergySegments segments are always reported stable.
inline constexpr std::size_t kMinEnergySegments = 32;

EnergyCheck energy_check(std::span<const double> times, std::span<const double> values);

}  // namespace flowldp
