#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "flowldp/error.hpp"
#include "flowldp/flow_sim.hpp"
#include "flowldp/metrics.hpp"
#include "flowldp/stats.hpp"

using namespace flowldp;

TEST_CASE("increment covariance entries") {
  const Kernel k = make_gaussian_kernel(1.0);
  const std::vector<double> x{0.0, 2.0, 2.0};
  const auto c = increment_covariance(k, x, 0.1, 0.01);
  CHECK(c(0, 0) == doctest::Approx(0.001).epsilon(1e-15));
  CHECK(c(0, 1) == doctest::Approx(0.001 * std::exp(-1.0)).epsilon(1e-14));
  CHECK(c(0, 1) == doctest::Approx(3.6788e-4).epsilon(1e-4));
  CHECK(c(1, 2) == c(1, 1));  // coincident positions
  CHECK(c(1, 0) == c(0, 1));
  const std::vector<double> same{1.0, 1.0, 1.0};
  const auto r1 = increment_covariance(k, same, 0.5, 0.1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r1);
  CHECK(eig.eigenvalues()(2) == doctest::Approx(3 * 0.05));
  CHECK(std::abs(eig.eigenvalues()(0)) < 1e-15);
  CHECK_THROWS_AS(increment_covariance(k, x, 0.0, 0.1), InvalidParameter);
  CHECK_THROWS_AS(increment_covariance(k, x, 0.5, 0.0), InvalidParameter);
}

TEST_CASE("covariance factor reproduces singular matrices") {
  const Kernel k = make_gaussian_kernel(1.0);
  const std::vector<double> x{0.0, 0.0, 1e-9, 3.0};
  const auto c = increment_covariance(k, x, 1.0, 1.0);
  const auto l = covariance_factor(c);
  CHECK((l * l.transpose() - c).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("path shape and start condition") {
  const Kernel k = make_gaussian_kernel(1.0);
  const std::vector<double> u{-1.0, 0.0, 0.5};
  const auto s = simulate_npoint_smooth(k, u, 0.3, 10, SimMode::direct(), 7);
  CHECK(s.path.values.rows() == 3);
  CHECK(s.path.values.cols() == 11);
  CHECK(s.path.times.front() == 0.0);
  CHECK(s.path.times.back() == 1.0);
  for (int i = 0; i < 3; ++i) CHECK(s.path.values(i, 0) == u[static_cast<std::size_t>(i)]);
  for (int j = 0; j <= 10; ++j) {
    CHECK(s.path.values(0, j) <= s.path.values(1, j));
    CHECK(s.path.values(1, j) <= s.path.values(2, j));
  }
  const auto again = simulate_npoint_smooth(k, u, 0.3, 10, SimMode::direct(), 7);
  CHECK(again.path.values == s.path.values);
  CHECK_THROWS_AS(simulate_npoint_smooth(k, std::vector<double>{1.0, 0.0}, 0.3, 10, SimMode::direct(), 1),
                  InvalidParameter);
  CHECK_THROWS_AS(simulate_npoint_smooth(k, u, 0.3, 10, SimMode::frozen(3), 1), InvalidParameter);
  CHECK_THROWS_AS(simulate_npoint_smooth(k, u, 0.3, 0, SimMode::direct(), 1), InvalidParameter);
}

TEST_CASE("one-point marginal is N(u, eps)") {
  const Kernel k = make_gaussian_kernel(1.0);
  const double eps = 0.4;
  std::vector<double> sq;
  const std::vector<double> u{0.7};
  for (std::uint64_t r = 0; r < 100000; ++r) {
    Rng rng(11, r);
    const auto s = simulate_npoint_smooth(k, u, eps, 4, SimMode::direct(), rng);
    const double d = s.path.values(0, 4) - 0.7;
    sq.push_back(d * d);
  }
  const auto m = mean_and_stderr(sq);
  CHECK(std::abs(m.mean - eps) <= 3.0 * m.std_error);
}

TEST_CASE("pair increment correlation is Phi_corr") {
  const Kernel k = make_gaussian_kernel(1.0);
  const std::vector<double> u{0.0, 2.0};
  // Small eps keeps the pair from crossing, so no order repair interferes.
  const double eps = 0.01;
  Rng rng(3);
  std::vector<double> prod;
  for (int r = 0; r < 100000; ++r) {
    const auto s = simulate_npoint_smooth(k, u, eps, 1, SimMode::direct(), rng);
    CHECK(s.order_violations == 0);
    const double a = s.path.values(0, 1);
    const double b = s.path.values(1, 1) - 2.0;
    prod.push_back(a * b / eps);
  }
  const auto m = mean_and_stderr(prod);
  CHECK(std::abs(m.mean - std::exp(-1.0)) <= 3.0 * m.std_error);
}

TEST_CASE("frozen at every step equals direct") {
  const Kernel k = make_gaussian_kernel(1.0);
  const std::vector<double> u{0.0, 0.3, 1.0};
  const auto d = simulate_npoint_smooth(k, u, 0.5, 8, SimMode::direct(), 99);
  const auto f = simulate_npoint_smooth(k, u, 0.5, 8, SimMode::frozen(8), 99);
  CHECK(d.path.values == f.path.values);
}

TEST_CASE("frozen scheme approaches direct as blocks shrink") {
  const Kernel k = make_gaussian_kernel(1.0);
  const WeightedNorm gh = gauss_hermite(16);
  std::vector<double> d4, d64;
  for (std::uint64_t r = 0; r < 100; ++r) {
    const auto d = simulate_npoint_smooth(k, gh.nodes, 0.5, 64, SimMode::direct(), 1000 + r);
    const auto f4 = simulate_npoint_smooth(k, gh.nodes, 0.5, 64, SimMode::frozen(4), 1000 + r);
    const auto f64 = simulate_npoint_smooth(k, gh.nodes, 0.5, 64, SimMode::frozen(64), 1000 + r);
    d4.push_back(weighted_sup_norm(gh, d.path.values - f4.path.values));
    d64.push_back(weighted_sup_norm(gh, d.path.values - f64.path.values));
  }
  std::sort(d4.begin(), d4.end());
  std::sort(d64.begin(), d64.end());
  CHECK(d64[50] < d4[50]);
}

TEST_CASE("quadratic variation concentrates near eps") {
  const Kernel k = make_gaussian_kernel(1.0);
  const std::vector<double> u{0.0, 1.0};
  const auto s = simulate_npoint_smooth(k, u, 0.2, 10000, SimMode::direct(), 5);
  for (int i = 0; i < 2; ++i) {
    double qv = 0.0;
    for (int j = 0; j < 10000; ++j) {
      const double d = s.path.values(i, j + 1) - s.path.values(i, j);
      qv += d * d;
    }
    CHECK(qv == doctest::Approx(0.2).epsilon(0.05));
  }
}

TEST_CASE("order violations vanish on fine grids") {
  const Kernel k = make_gaussian_kernel(1.0);
  const std::vector<double> u{0.0, 0.05, 0.1};
  const auto s = simulate_npoint_smooth(k, u, 0.1, 4096, SimMode::direct(), 21);
  CHECK(s.violation_fraction() < 0.01);
}

TEST_CASE("time-changed mode uses the same covariance product") {
  const Kernel k = make_gaussian_kernel(1.0);
  const std::vector<double> x{0.0, 0.4, 2.0};
  const double eps = 0.3, dt = 1.0 / 16;
  CHECK(increment_covariance(k, x, eps, dt) == increment_covariance(k, x, 1.0, eps * dt));
}
