#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "flowldp/kernels.hpp"
#include "flowldp/rng.hpp"

namespace flowldp {

/// n particle trajectories on a uniform time grid over [0, 1].
/// values(i, j) = x(u_i, t_j); row i starts at starts[i].
struct FlowPath {
  std::vector<double> starts;
  std::vector<double> times;
  Eigen::MatrixXd values;
  double epsilon = 1.0;  // noise intensity or time scale the path was generated with

  std::size_t particles() const { return starts.size(); }
  std::size_t steps() const { return times.empty() ? 0 : times.size() - 1; }
};

std::vector<double> uniform_times(std::size_t steps);

class SimMode {
 public:
  enum class Variant { direct, frozen, time_changed };

  static SimMode direct() { return SimMode(Variant::direct, 0); }
  // Coefficients frozen on m equal blocks of the time grid.
  static SimMode frozen(std::size_t blocks) { return SimMode(Variant::frozen, blocks); }
  // Unit-intensity flow run on [0, eps], time relabelled to [0, 1].
  static SimMode time_changed() { return SimMode(Variant::time_changed, 0); }

  Variant variant() const { return variant_; }
  std::size_t blocks() const { return blocks_; }

 private:
  SimMode(Variant v, std::size_t m) : variant_(v), blocks_(m) {}
  Variant variant_;
  std::size_t blocks_;
};

// C_ij = eps * dt * Phi_corr(x_i - x_j).
Eigen::MatrixXd increment_covariance(const Kernel& k, std::span<const double> positions,
                                     double eps, double dt);

// Symmetric square root factor L (L L^T = C) with negative eigenvalues clipped to 0.
Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& cov);

struct SmoothSimulation {
  FlowPath path;
  // Steps after which the raw Euler state was out of order and had to be sorted.
  std::size_t order_violations = 0;

  double violation_fraction() const {
    return path.steps() == 0 ? 0.0
                             : static_cast<double>(order_violations) /
                                   static_cast<double>(path.steps());
  }
};

// n-point motion of the smoothly correlated flow with exact gaussian increments.
// The normal variates are drawn from `rng` in a fixed order (n per step), so two
// runs from equal generators are driven by the same noise regardless of mode.
SmoothSimulation simulate_npoint_smooth(const Kernel& k, std::span<const double> starts,
                                        double eps, std::size_t steps, SimMode mode, Rng& rng);

SmoothSimulation simulate_npoint_smooth(const Kernel& k, std::span<const double> starts,
                                        double eps, std::size_t steps, SimMode mode,
                                        std::uint64_t seed);

}  // namespace flowldp
