#include <cmath>
#include <vector>

#include "doctest.h"
#include "flowldp/error.hpp"
#include "flowldp/varmin.hpp"

using namespace flowldp;

TEST_CASE("Schilder endpoint problem") {
  VariationalProblem p;
  p.functional = Functional::schilder_1d;
  p.constraint = EndpointAtLeast{1.0, 0};
  p.steps = 32;
  p.starts = {0.0};
  const auto s = minimize_rate(p);
  CHECK(s.value == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(s.grad_check <= 1e-5);
  CHECK(s.converged);
  for (std::size_t j = 0; j < s.path.points(); ++j) {
    CHECK(s.path.value(0, j) == doctest::Approx(s.path.times()[j]).epsilon(1e-6));
  }
  p.steps = 64;
  CHECK(minimize_rate(p).value == doctest::Approx(s.value).epsilon(1e-6));
}

TEST_CASE("larger constraint sets give smaller values") {
  VariationalProblem p;
  double prev = -1.0;
  for (double c : {0.25, 0.5, 1.0, 2.0}) {
    p.constraint = EndpointAtLeast{c, 0};
    p.steps = 16;
    const double v = minimize_rate(p).value;
    CHECK(v == doctest::Approx(0.5 * c * c).epsilon(1e-8));
    CHECK(v >= prev);
    prev = v;
  }
  p.constraint = EndpointAtLeast{-1.0, 0};
  CHECK(minimize_rate(p).value == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("coalescing pair meets at the midpoint") {
  for (double d : {0.5, 1.0, 2.0}) {
    VariationalProblem p;
    p.functional = Functional::npoint_coalescing;
    p.constraint = CoalesceBy{1.0};
    p.steps = 32;
    p.starts = {0.0, d};
    const auto s = minimize_rate(p);
    CHECK(s.value == doctest::Approx(d * d / 4.0).epsilon(1e-6));
    CHECK(s.grad_check <= 1e-5);
    CHECK(s.path.value(0, s.path.points() - 1) == doctest::Approx(d / 2).epsilon(1e-6));
    CHECK(s.path.value(1, s.path.points() - 1) == doctest::Approx(d / 2).epsilon(1e-6));
  }
}

TEST_CASE("earlier deadlines cost more") {
  VariationalProblem p;
  p.functional = Functional::npoint_coalescing;
  p.steps = 32;
  p.starts = {0.0, 1.0};
  p.constraint = CoalesceBy{0.5};
  // Straight to the midpoint by t = 0.5: 2 * (1/2) * 1^2 * 0.5.
  CHECK(minimize_rate(p).value == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("three particles") {
  VariationalProblem p;
  p.functional = Functional::npoint_coalescing;
  p.constraint = CoalesceBy{1.0};
  p.steps = 16;
  p.starts = {0.0, 1.0, 2.0};
  const auto s = minimize_rate(p);
  // All three meet at the middle particle's start: 1/2 + 1/2 = 1.
  CHECK(s.value == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(s.grad_check <= 1e-5);
}

TEST_CASE("stopped hit problems") {
  Eigen::VectorXd n(1);
  n << 1.0;
  for (double c : {0.5, 1.0, 1.5}) {
    VariationalProblem p;
    p.functional = Functional::stopped;
    p.constraint = HitSetBy{HittingSet::halfspace(n, c), 1.0};
    p.steps = 16;
    p.starts = {0.0};
    const auto s = minimize_rate(p);
    CHECK(s.value == doctest::Approx(c * c / 2.0).epsilon(1e-6));
    CHECK(s.grad_check <= 1e-5);
  }
  VariationalProblem in;
  in.functional = Functional::stopped;
  in.constraint = HitSetBy{HittingSet::halfspace(n, -1.0), 1.0};
  in.starts = {0.0};
  CHECK(minimize_rate(in).value == 0.0);

  Eigen::VectorXd lo(2), hi(2);
  lo << 1.0, 1.0;
  hi << 2.0, 2.0;
  VariationalProblem box;
  box.functional = Functional::stopped;
  box.constraint = HitSetBy{HittingSet::box(lo, hi), 1.0};
  box.steps = 16;
  box.starts = {0.0, 0.0};
  // Straight to the corner (1, 1): (1/2) * 2.
  CHECK(minimize_rate(box).value == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("infeasible and unsupported problems") {
  VariationalProblem p;
  p.functional = Functional::stopped;
  Eigen::VectorXd n(1);
  n << 1.0;
  p.constraint = HitSetBy{HittingSet::halfspace(n, 1.0), 0.01};
  p.steps = 16;
  p.starts = {0.0};
  CHECK_THROWS_AS(minimize_rate(p), InfeasibleProblem);
  VariationalProblem q;
  q.functional = Functional::schilder_1d;
  q.constraint = CoalesceBy{1.0};
  CHECK_THROWS_AS(minimize_rate(q), InvalidParameter);
}
