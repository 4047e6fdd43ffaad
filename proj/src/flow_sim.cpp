#include "flowldp/flow_sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flowldp/error.hpp"

namespace flowldp {

std::vector<double> uniform_times(std::size_t steps) {
  std::vector<double> t(steps + 1);
  for (std::size_t j = 0; j <= steps; ++j) {
    t[j] = static_cast<double>(j) / static_cast<double>(steps);
  }
  return t;
}

Eigen::MatrixXd increment_covariance(const Kernel& k, std::span<const double> positions,
                                     double eps, double dt) {
  if (!(eps > 0.0 && eps <= 1.0)) throw InvalidParameter("increment_covariance: eps must lie in (0, 1]");
  if (!(dt > 0.0)) throw InvalidParameter("increment_covariance: dt must be positive");
  const auto n = static_cast<Eigen::Index>(positions.size());
  const double scale = eps * dt;
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    c(i, i) = scale;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = scale * k.correlation(positions[static_cast<std::size_t>(i)] -
                                             positions[static_cast<std::size_t>(j)]);
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  return c;
}

Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& cov) {
  if (cov.rows() == 1) {
    Eigen::MatrixXd l(1, 1);
    l(0, 0) = std::sqrt(std::max(cov(0, 0), 0.0));
    return l;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) {
    throw InvalidParameter("covariance_factor: eigendecomposition failed");
  }
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

namespace {

void validate_starts(std::span<const double> starts) {
  if (starts.empty()) throw InvalidParameter("simulation needs at least one start point");
  for (std::size_t i = 0; i < starts.size(); ++i) {
    if (!std::isfinite(starts[i])) throw InvalidParameter("non-finite start point");
    if (i > 0 && starts[i] < starts[i - 1]) throw InvalidParameter("start points must be sorted");
  }
}

}  // namespace

SmoothSimulation simulate_npoint_smooth(const Kernel& k, std::span<const double> starts,
                                        double eps, std::size_t steps, SimMode mode, Rng& rng) {
  validate_starts(starts);
  if (steps == 0) throw InvalidParameter("simulate_npoint_smooth: need at least one step");
  if (!(eps > 0.0 && eps <= 1.0)) throw InvalidParameter("simulate_npoint_smooth: eps must lie in (0, 1]");
  std::size_t block_len = 1;
  if (mode.variant() == SimMode::Variant::frozen) {
    if (mode.blocks() == 0 || steps % mode.blocks() != 0) {
      throw InvalidParameter("frozen mode: block count " + std::to_string(mode.blocks()) +
                             " must divide the step count " + std::to_string(steps));
    }
    block_len = steps / mode.blocks();
  }

  const std::size_t n = starts.size();
  const double dt = 1.0 / static_cast<double>(steps);
  // Time-changed: intensity 1 on the stretched step eps * dt. Both parameterizations
  // feed the covariance builder the same product eps * dt.
  const bool time_changed = mode.variant() == SimMode::Variant::time_changed;
  const double cov_eps = time_changed ? 1.0 : eps;
  const double cov_dt = time_changed ? eps * dt : dt;

  SmoothSimulation out;
  out.path.starts.assign(starts.begin(), starts.end());
  out.path.times = uniform_times(steps);
  out.path.epsilon = eps;
  out.path.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(steps + 1));

  std::vector<double> x(starts.begin(), starts.end());
  for (std::size_t i = 0; i < n; ++i) out.path.values(static_cast<Eigen::Index>(i), 0) = x[i];

  if (n == 1) {
    const double sd = std::sqrt(cov_eps * cov_dt);
    for (std::size_t j = 0; j < steps; ++j) {
      x[0] += sd * rng.normal();
      out.path.values(0, static_cast<Eigen::Index>(j + 1)) = x[0];
    }
    return out;
  }

  Eigen::MatrixXd factor;
  Eigen::VectorXd z(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < steps; ++j) {
    const bool refresh = mode.variant() != SimMode::Variant::frozen || j % block_len == 0;
    if (refresh) factor = covariance_factor(increment_covariance(k, x, cov_eps, cov_dt));
    for (std::size_t i = 0; i < n; ++i) z(static_cast<Eigen::Index>(i)) = rng.normal();
    const Eigen::VectorXd g = factor * z;
    bool ordered = true;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += g(static_cast<Eigen::Index>(i));
      if (i > 0 && x[i] < x[i - 1]) ordered = false;
    }
    if (!ordered) {
      ++out.order_violations;
      std::sort(x.begin(), x.end());
    }
    for (std::size_t i = 0; i < n; ++i) {
      out.path.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) = x[i];
    }
  }
  return out;
}

SmoothSimulation simulate_npoint_smooth(const Kernel& k, std::span<const double> starts,
                                        double eps, std::size_t steps, SimMode mode,
                                        std::uint64_t seed) {
  Rng rng(seed);
  return simulate_npoint_smooth(k, starts, eps, steps, mode, rng);
}

}  // namespace flowldp
