#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "flowldp/pathmaps.hpp"

namespace flowldp {

enum class Functional { schilder_1d, stopped, npoint_coalescing };

struct EndpointAtLeast {
  double c;
  std::size_t particle = 0;
};
struct EndpointInBox {
  Box box;
};
struct CoalesceBy {
  double t_c;  // every particle merged by t_c
};
struct HitSetBy {
  HittingSet set;
  double t_c;
};

using Constraint = std::variant<EndpointAtLeast, EndpointInBox, CoalesceBy, HitSetBy>;

/// Discrete Dirichlet-energy minimization over paths on a uniform grid of T steps.
/// starts: particle starts (schilder_1d: one, npoint_coalescing: n <= 4 sorted),
/// or the coordinates of the start point (stopped).
struct VariationalProblem {
  Functional functional = Functional::schilder_1d;
  Constraint constraint = EndpointAtLeast{1.0, 0};
  std::size_t steps = 64;
  std::vector<double> starts{0.0};
};

struct Tolerances {
  double gradient = 1e-10;  // stop when the projected-gradient norm falls below this
  std::size_t max_iterations = 10000;
  std::size_t multistarts = 5;
  std::uint64_t seed = 20240607;
};

struct VariationalSolution {
  PiecewiseLinearPath path;  // one row per particle / coordinate
  double value = 0.0;
  double gradient_norm = 0.0;  // projected-gradient norm at the solution
  double grad_check = 0.0;     // max relative error, analytic vs central differences
  std::size_t iterations = 0;
  bool converged = true;
  std::vector<double> event_times;  // merge times per boundary, or the hitting time
};

// Throws InfeasibleProblem when no grid path satisfies the constraint, and
// InvalidParameter for unsupported functional/constraint pairs.
VariationalSolution minimize_rate(const VariationalProblem& p, const Tolerances& tol = {});

}  // namespace flowldp
