#include <cmath>
#include <optional>
#include <vector>

#include "doctest.h"
#include "flowldp/arratia.hpp"
#include "flowldp/error.hpp"
#include "flowldp/stats.hpp"
#include "oracles.hpp"

using namespace flowldp;

TEST_CASE("single particle is a Brownian motion") {
  const std::vector<double> u{0.25};
  std::vector<double> sq;
  for (std::uint64_t r = 0; r < 100000; ++r) {
    Rng rng(17, r);
    const auto s = simulate_arratia(u, 8, CrossingMode::bridge, rng);
    CHECK(s.record.merges.empty());
    const double d = s.path.values(0, 8) - 0.25;
    sq.push_back(d * d);
  }
  const auto m = mean_and_stderr(sq);
  CHECK(std::abs(m.mean - 1.0) <= 3.0 * m.std_error);
}

TEST_CASE("pair meeting probability follows the reflection principle") {
  const std::vector<double> u{0.0, 1.0};
  std::size_t met = 0;
  const std::size_t n = 100000;
  for (std::uint64_t r = 0; r < n; ++r) {
    Rng rng(23, r);
    met += simulate_arratia(u, 2048, CrossingMode::bridge, rng).record.clusters(1.0) == 1 ? 1 : 0;
  }
  const double p = oracle::reflection_meet(1.0, 1.0);
  CHECK(p == doctest::Approx(0.4795).epsilon(1e-3));
  const double phat = static_cast<double>(met) / n;
  CHECK(std::abs(phat - p) <= 3.0 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("naive crossing undercounts on a coarse grid") {
  const std::vector<double> u{0.0, 1.0};
  std::size_t bridge = 0, naive = 0;
  for (std::uint64_t r = 0; r < 20000; ++r) {
    bridge += simulate_arratia(u, 4, CrossingMode::bridge, r).record.met[1];
    naive += simulate_arratia(u, 4, CrossingMode::naive, r).record.met[1];
  }
  CHECK(naive < bridge);
}

TEST_CASE("ordering, sticking and shared increments") {
  const std::vector<double> u{0.0, 0.1, 0.2, 0.5, 0.9};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = simulate_arratia(u, 256, CrossingMode::bridge, seed);
    const auto& x = s.path.values;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      for (Eigen::Index i = 1; i < x.rows(); ++i) CHECK(x(i, j) >= x(i - 1, j));
    }
    for (std::size_t k = 1; k < u.size(); ++k) {
      if (!s.record.met[k]) continue;
      const std::size_t j0 = static_cast<std::size_t>(std::llround(s.record.tau[k] * 256));
      for (std::size_t j = j0; j <= 256; ++j) {
        CHECK(x(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) ==
              x(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(j)));
      }
    }
    for (std::size_t m = 1; m < s.record.merges.size(); ++m) {
      CHECK(s.record.merges[m].time >= s.record.merges[m - 1].time);
    }
  }
  CHECK_THROWS_AS(simulate_arratia(std::vector<double>{0.0, 0.0}, 4, CrossingMode::bridge, 1), InvalidParameter);
  CHECK_THROWS_AS(simulate_arratia(std::vector<double>{1.0, 0.0}, 4, CrossingMode::bridge, 1), InvalidParameter);
}

TEST_CASE("total free time on injected meetings") {
  const std::vector<std::optional<double>> m{0.25, 0.5};
  const auto rec = CoalescenceRecord::from_meetings({0.0, 0.5, 1.0}, m);
  CHECK(total_free_time(rec, std::vector<double>{0.0, 0.5, 1.0}) == 1.75);
  CHECK(total_free_time(rec, std::vector<double>{0.5}) == 1.0);
  // Coarser partition: the pair (0, 1) separates until both boundaries closed.
  CHECK(total_free_time(rec, std::vector<double>{0.0, 1.0}) == 1.5);
  CHECK_THROWS_AS(total_free_time(rec, std::vector<double>{0.3}), InvalidParameter);
  const std::vector<std::optional<double>> never{std::nullopt, 0.5};
  const auto open = CoalescenceRecord::from_meetings({0.0, 0.5, 1.0}, never);
  CHECK(total_free_time(open, std::vector<double>{0.0, 1.0}) == 2.0);
}

TEST_CASE("refinement never lowers the free time") {
  std::vector<double> u;
  for (int k = 0; k <= 16; ++k) u.push_back(k / 16.0);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto s = simulate_arratia(u, 128, CrossingMode::bridge, seed, 0.05);
    double prev = 0.0;
    for (int level = 0; level <= 4; ++level) {
      std::vector<double> part;
      for (int k = 0; k <= 16; k += 16 >> level) part.push_back(k / 16.0);
      const double v = total_free_time(s.record, part);
      CHECK(v >= prev);
      prev = v;
    }
  }
}

TEST_CASE("empirical measures") {
  const std::vector<std::optional<double>> m{0.2, std::nullopt};
  auto rec = CoalescenceRecord::from_meetings({0.0, 0.5, 0.75}, m);
  FlowPath p;
  p.starts = {0.0, 0.5, 0.75};
  p.times = uniform_times(2);
  p.values.resize(3, 3);
  p.values << 0.0, 0.1, 0.2, 0.5, 0.1, 0.2, 0.75, 0.8, 0.9;
  const std::vector<double> cells{0.5, 0.25, 0.25};
  const auto mu = empirical_measure(p, rec, 1.0, cells);
  REQUIRE(mu.size() == 2);
  CHECK(mu.atoms()[0].mass == 0.75);
  CHECK(mu.atoms()[1].mass == 0.25);
  const auto mu0 = empirical_measure(p, rec, 0.0, cells);
  CHECK(mu0.size() == 3);
  CHECK_THROWS_AS(empirical_measure(p, rec, 1.5), InvalidParameter);

  std::vector<double> u;
  for (int i = 0; i < 8; ++i) u.push_back((i + 0.5) / 8);
  const auto s = simulate_arratia(u, 64, CrossingMode::bridge, 4);
  const auto start = empirical_measure(s.path, s.record, 0.0);
  CHECK(start.size() == 8);
  for (const auto& a : start.atoms()) CHECK(a.mass == doctest::Approx(0.125));
  for (double t : {0.0, 0.3, 0.77, 1.0}) {
    CHECK(empirical_measure(s.path, s.record, t).total_mass() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("Girsanov density") {
  const std::vector<double> u{0.0, 0.5};
  const auto s = simulate_arratia(u, 32, CrossingMode::bridge, 8);
  CHECK(girsanov_density(s.path, s.record, [](double) { return 0.0; }) == 1.0);
  const std::vector<double> one{0.3};
  const auto p = simulate_arratia(one, 32, CrossingMode::bridge, 9);
  const double c = 0.7;
  const double expect = std::exp(c * (p.path.values(0, 32) - 0.3) - 0.5 * c * c);
  CHECK(girsanov_density(p.path, p.record, [c](double) { return c; }) == doctest::Approx(expect).epsilon(1e-12));
  CHECK_THROWS_AS(girsanov_density(p.path, p.record, [](double) { return std::nan(""); }), InvalidParameter);

  std::vector<double> w, wx;
  for (std::uint64_t r = 0; r < 100000; ++r) {
    Rng rng(31, r);
    const auto q = simulate_arratia(one, 16, CrossingMode::bridge, rng);
    const double d = girsanov_density(q.path, q.record, [](double) { return 0.5; });
    w.push_back(d);
    wx.push_back(d * q.path.values(0, 16));
  }
  const auto mw = mean_and_stderr(w);
  const auto mx = mean_and_stderr(wx);
  CHECK(std::abs(mw.mean - 1.0) <= 3.0 * mw.std_error);
  CHECK(std::abs(mx.mean - 0.8) <= 3.0 * mx.std_error);
}
