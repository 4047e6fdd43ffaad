#include "flowldp/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "flowldp/error.hpp"
#include "flowldp/parallel.hpp"

namespace flowldp {

double coupled_mass(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double eps) {
  const auto& a = mu.atoms();
  const auto& b = nu.atoms();
  std::vector<double> left(b.size());
  for (std::size_t j = 0; j < b.size(); ++j) left[j] = b[j].mass;
  double moved = 0.0;
  std::size_t first = 0;  // leftmost nu atom with capacity that may still be reachable
  for (const Atom& x : a) {
    while (first < b.size() && (b[first].position < x.position - eps || left[first] <= 0.0)) ++first;
    double need = x.mass;
    for (std::size_t j = first; j < b.size() && need > 0.0; ++j) {
      if (b[j].position > x.position + eps) break;
      const double m = std::min(need, left[j]);
      left[j] -= m;
      need -= m;
      moved += m;
    }
  }
  return moved;
}

double prokhorov(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double tol) {
  if (!mu.is_probability(1e-9) || !nu.is_probability(1e-9)) {
    throw InvalidParameter("prokhorov: both arguments must be probability measures");
  }
  if (!(tol > 0.0)) throw InvalidParameter("prokhorov: tolerance must be positive");
  auto feasible = [&](double eps) { return coupled_mass(mu, nu, eps) >= 1.0 - eps - 1e-12; };
  if (feasible(0.0)) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  return hi;
}

WeightedNorm gauss_hermite(std::size_t points) {
  if (points == 0) throw InvalidParameter("gauss_hermite: need at least one node");
  // Jacobi matrix of the probabilists' Hermite polynomials.
  const auto n = static_cast<Eigen::Index>(points);
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 1; k < n; ++k) {
    j(k, k - 1) = j(k - 1, k) = std::sqrt(static_cast<double>(k));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(j);
  WeightedNorm w;
  w.nodes.resize(points);
  w.weights.resize(points);
  double total = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    w.nodes[static_cast<std::size_t>(k)] = eig.eigenvalues()(k);
    const double v = eig.eigenvectors()(0, k);
    w.weights[static_cast<std::size_t>(k)] = v * v;
    total += v * v;
  }
  for (double& x : w.weights) x /= total;
  return w;
}

double weighted_sup_norm(const WeightedNorm& norm, const Eigen::MatrixXd& field) {
  if (static_cast<std::size_t>(field.rows()) != norm.nodes.size()) {
    throw InvalidParameter("weighted_sup_norm: field rows must match the quadrature nodes");
  }
  const Eigen::Map<const Eigen::VectorXd> w(norm.weights.data(), field.rows());
  const Eigen::RowVectorXd second = w.transpose() * field.cwiseAbs2();
  return field.cols() == 0 ? 0.0 : std::sqrt(std::max(second.maxCoeff(), 0.0));
}

DiscreteMeasure forest_measure(const Forest& y, double t) {
  const std::size_t n = y.u.size();
  if (n == 0 || y.u.front() != 0.0) throw InvalidParameter("forest_measure: u grid must start at 0");
  if (static_cast<std::size_t>(y.values.rows()) != n ||
      static_cast<std::size_t>(y.values.cols()) != y.times.size() || y.times.empty()) {
    throw InvalidParameter("forest_measure: forest shape mismatch");
  }
  if (!(t >= y.times.front() && t <= y.times.back())) {
    throw InvalidParameter("forest_measure: t outside the forest's time range");
  }
  std::size_t j = static_cast<std::size_t>(
      std::upper_bound(y.times.begin(), y.times.end(), t) - y.times.begin());
  j = j == 0 ? 0 : j - 1;
  const std::size_t j1 = std::min(j + 1, y.times.size() - 1);
  const double w = j1 == j ? 0.0 : (t - y.times[j]) / (y.times[j1] - y.times[j]);

  std::vector<double> pos(n);
  std::vector<double> mass(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double hi = i + 1 < n ? y.u[i + 1] : 1.0;
    if (!(hi > y.u[i])) throw InvalidParameter("forest_measure: u grid must increase within [0, 1)");
    const auto r = static_cast<Eigen::Index>(i);
    const double a = y.values(r, static_cast<Eigen::Index>(j));
    pos[i] = w == 0.0 ? a : a + w * (y.values(r, static_cast<Eigen::Index>(j1)) - a);
    mass[i] = hi - y.u[i];
  }
  return DiscreteMeasure::from_points(pos, mass);
}

double flow_distance(const Forest& y1, const Forest& y2, std::span<const double> t_grid, double tol) {
  if (t_grid.empty()) throw InvalidParameter("flow_distance: empty time grid");
  std::vector<double> d(t_grid.size());
  parallel_blocks(t_grid.size(), 8, default_workers(), [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t i = b; i < e; ++i) {
      d[i] = prokhorov(forest_measure(y1, t_grid[i]), forest_measure(y2, t_grid[i]), tol);
    }
  });
  return *std::max_element(d.begin(), d.end());
}

}  // namespace flowldp
