#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "flowldp/measure.hpp"
#include "flowldp/pathmaps.hpp"

namespace flowldp {

// Largest mass that can be moved from mu to nu along pairs at distance <= eps
// (closed balls). Both measures' atoms are sorted, so each mu atom is joined to a
// contiguous range of nu atoms with monotone endpoints, and filling the leftmost
// available capacity first is optimal.
double coupled_mass(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double eps);

// Levy-Prokhorov distance by bisection on eps in [0, 1], using Strassen's
// characterization: sigma <= eps iff some coupling puts mass >= 1 - eps within eps.
double prokhorov(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double tol = 1e-6);

/// Gauss-Hermite rule for the standard normal measure.
struct WeightedNorm {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to 1
};

WeightedNorm gauss_hermite(std::size_t points = 64);

// sup_t (sum_i w_i x(u_i, t)^2)^{1/2}; field has one row per node, one column per time.
double weighted_sup_norm(const WeightedNorm& norm, const Eigen::MatrixXd& field);

// Image of Lebesgue measure on [0, 1] under u -> y(u, t): the query point u_i
// carries the cell [u_i, u_{i+1}) with u_n := 1. Requires u_0 = 0.
DiscreteMeasure forest_measure(const Forest& y, double t);

// max over the t grid of prokhorov(y1(., t), y2(., t)).
double flow_distance(const Forest& y1, const Forest& y2, std::span<const double> t_grid,
                     double tol = 1e-6);

}  // namespace flowldp
