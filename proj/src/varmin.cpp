#include "flowldp/varmin.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>

#include "flowldp/error.hpp"
#include "flowldp/flow_sim.hpp"
#include "flowldp/rng.hpp"

namespace flowldp {

namespace {

// Velocities v(r, l) on step l of row r, stored at r * T + l. Row r starts at s[r]
// and sits at s[r] + dt * sum_{l < j} v(r, l) at time index j while active.
struct Setup {
  std::size_t rows = 0;
  std::size_t steps = 0;
  double dt = 0.0;
  std::vector<double> s;
  std::vector<char> active;  // variables that move the path and carry cost
  std::function<void(Eigen::VectorXd&)> project;
  std::vector<std::size_t> events;  // merge index per boundary, or the hit index

  std::size_t size() const { return rows * steps; }
};

double objective(const Setup& su, const Eigen::VectorXd& v) {
  double e = 0.0;
  for (std::size_t i = 0; i < su.size(); ++i) {
    if (su.active[i]) e += v[static_cast<Eigen::Index>(i)] * v[static_cast<Eigen::Index>(i)];
  }
  return 0.5 * su.dt * e;
}

Eigen::VectorXd gradient(const Setup& su, const Eigen::VectorXd& v) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(v.size());
  for (std::size_t i = 0; i < su.size(); ++i) {
    if (su.active[i]) g[static_cast<Eigen::Index>(i)] = su.dt * v[static_cast<Eigen::Index>(i)];
  }
  return g;
}

std::size_t last_index(double t_c, std::size_t steps) {
  if (!(t_c > 0.0 && t_c <= 1.0)) throw InvalidParameter("constraint time must lie in (0, 1]");
  return static_cast<std::size_t>(std::floor(t_c * static_cast<double>(steps) + 1e-9));
}

// Rows 0..rows-1 must reach `set` (a set in R^rows) at time index m; nothing moves after m.
Setup reach_setup(const std::vector<double>& starts, std::size_t steps, const HittingSet& set,
                  std::size_t m, bool stop_after) {
  Setup su;
  su.rows = starts.size();
  su.steps = steps;
  su.dt = 1.0 / static_cast<double>(steps);
  su.s = starts;
  su.events = {m};
  su.active.assign(su.size(), 0);
  for (std::size_t r = 0; r < su.rows; ++r) {
    for (std::size_t l = 0; l < steps; ++l) su.active[r * steps + l] = (l < m || !stop_after) ? 1 : 0;
  }
  const std::size_t rows = su.rows;
  const double dt = su.dt;
  su.project = [rows, steps, dt, m, set, s = su.s](Eigen::VectorXd& v) {
    Eigen::VectorXd pos(static_cast<Eigen::Index>(rows));
    for (std::size_t r = 0; r < rows; ++r) {
      double sum = 0.0;
      for (std::size_t l = 0; l < m; ++l) sum += v[static_cast<Eigen::Index>(r * steps + l)];
      pos[static_cast<Eigen::Index>(r)] = s[r] + dt * sum;
    }
    const Eigen::VectorXd shift = (set.snap(pos) - pos) / (static_cast<double>(m) * dt);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t l = 0; l < m; ++l) v[static_cast<Eigen::Index>(r * steps + l)] += shift[static_cast<Eigen::Index>(r)];
    }
  };
  return su;
}

// Particle k (k >= 1) is free before merges[k - 1] and then follows particle k - 1.
Setup merge_setup(const std::vector<double>& starts, std::size_t steps,
                  const std::vector<std::size_t>& merges) {
  Setup su;
  su.rows = starts.size();
  su.steps = steps;
  su.dt = 1.0 / static_cast<double>(steps);
  su.s = starts;
  su.events = merges;
  su.active.assign(su.size(), 0);
  for (std::size_t r = 0; r < su.rows; ++r) {
    const std::size_t free_until = r == 0 ? steps : merges[r - 1];
    for (std::size_t l = 0; l < free_until; ++l) su.active[r * steps + l] = 1;
  }
  const auto cols = static_cast<Eigen::Index>(su.size());
  const auto nc = static_cast<Eigen::Index>(merges.size());

  // Position of particle i at time index m as an affine function of v.
  std::function<std::pair<Eigen::RowVectorXd, double>(std::size_t, std::size_t)> position =
      [&](std::size_t i, std::size_t m) -> std::pair<Eigen::RowVectorXd, double> {
    if (i > 0 && merges[i - 1] <= m) return position(i - 1, m);
    Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(cols);
    for (std::size_t l = 0; l < m; ++l) c[static_cast<Eigen::Index>(i * steps + l)] = su.dt;
    return {c, starts[i]};
  };

  Eigen::MatrixXd a(nc, cols);
  Eigen::VectorXd b(nc);
  for (std::size_t k = 1; k < su.rows; ++k) {
    const std::size_t m = merges[k - 1];
    Eigen::RowVectorXd own = Eigen::RowVectorXd::Zero(cols);
    for (std::size_t l = 0; l < m; ++l) own[static_cast<Eigen::Index>(k * steps + l)] = su.dt;
    const auto [left, left_const] = position(k - 1, m);
    a.row(static_cast<Eigen::Index>(k - 1)) = own - left;
    b[static_cast<Eigen::Index>(k - 1)] = left_const - starts[k];
  }
  const Eigen::MatrixXd gram = a * a.transpose();
  auto solver = std::make_shared<Eigen::LDLT<Eigen::MatrixXd>>(gram);
  su.project = [a, b, solver](Eigen::VectorXd& v) {
    if (a.rows() == 0) return;
    v -= a.transpose() * solver->solve(a * v - b);
  };
  return su;
}

double least_norm_cost(const Setup& su) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(su.size()));
  su.project(v);
  return objective(su, v);
}

struct Descent {
  Eigen::VectorXd v;
  double value = 0.0;
  double gradient_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

double projected_gradient_norm(const Setup& su, const Eigen::VectorXd& v) {
  const double alpha = 1.0 / su.dt;
  Eigen::VectorXd next = v - alpha * gradient(su, v);
  su.project(next);
  return (v - next).norm() / alpha;
}

Descent descend(const Setup& su, Eigen::VectorXd v, const Tolerances& tol) {
  su.project(v);
  Descent d;
  double f = objective(su, v);
  double alpha = 1.0 / su.dt;  // 1 / Lipschitz constant of the gradient
  for (std::size_t it = 0; it < tol.max_iterations; ++it) {
    const Eigen::VectorXd g = gradient(su, v);
    Eigen::VectorXd next;
    double f_next = 0.0;
    double a = alpha;
    for (int bt = 0; bt < 60; ++bt) {
      next = v - a * g;
      su.project(next);
      f_next = objective(su, next);
      const Eigen::VectorXd step = next - v;
      if (f_next <= f + g.dot(step) + step.squaredNorm() / (2.0 * a) + 1e-15 * std::abs(f)) break;
      a *= 0.5;
    }
    const double gnorm = (v - next).norm() / a;
    v = std::move(next);
    f = f_next;
    d.iterations = it + 1;
    if (gnorm < tol.gradient) {
      d.converged = true;
      break;
    }
  }
  d.gradient_norm = projected_gradient_norm(su, v);
  d.converged = d.converged || d.gradient_norm < tol.gradient;
  d.value = f;
  d.v = std::move(v);
  return d;
}

double gradient_check(const Setup& su, const Eigen::VectorXd& v) {
  const Eigen::VectorXd g = gradient(su, v);
  const double gmax = g.cwiseAbs().maxCoeff();
  double worst = 0.0;
  Eigen::VectorXd w = v;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double h = 1e-5 * std::max(1.0, std::abs(v[i]));
    w[i] = v[i] + h;
    const double fp = objective(su, w);
    w[i] = v[i] - h;
    const double fm = objective(su, w);
    w[i] = v[i];
    const double fd = (fp - fm) / (2.0 * h);
    const double scale = std::max({std::abs(g[i]), std::abs(fd), 1e-3 * gmax,
                                   std::numeric_limits<double>::min()});
    worst = std::max(worst, std::abs(g[i] - fd) / scale);
  }
  return worst;
}

PiecewiseLinearPath build_path(const Setup& su, const Eigen::VectorXd& v, bool merging) {
  const std::size_t t = su.steps;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(su.rows), static_cast<Eigen::Index>(t + 1));
  for (std::size_t r = 0; r < su.rows; ++r) {
    double pos = su.s[r];
    x(static_cast<Eigen::Index>(r), 0) = pos;
    for (std::size_t l = 0; l < t; ++l) {
      if (su.active[r * t + l]) pos += su.dt * v[static_cast<Eigen::Index>(r * t + l)];
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(l + 1)) = pos;
    }
  }
  if (merging) {
    for (std::size_t k = 1; k < su.rows; ++k) {
      for (std::size_t j = su.events[k - 1]; j <= t; ++j) {
        x(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
            x(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(j));
      }
    }
  }
  return PiecewiseLinearPath(uniform_times(t), std::move(x));
}

}  // namespace

namespace {

// Best merge indices (each in 1..last) by least-norm cost: exhaustive when small,
// otherwise a coarse lattice followed by a shrinking pattern search.
std::vector<std::size_t> best_merges(const std::vector<double>& starts, std::size_t steps,
                                     std::size_t last) {
  const std::size_t b = starts.size() - 1;
  if (b == 0) return {};
  auto cost = [&](const std::vector<std::size_t>& m) {
    return least_norm_cost(merge_setup(starts, steps, m));
  };
  double combos = std::pow(static_cast<double>(last), static_cast<double>(b));
  std::size_t stride = 1;
  if (combos > 2e5) stride = (last + 15) / 16;

  std::vector<std::size_t> values;
  for (std::size_t m = last; m >= 1; m = m > stride ? m - stride : 0) {
    values.push_back(m);
    if (m <= stride) break;
  }
  std::vector<std::size_t> idx(b, 0);
  std::vector<std::size_t> best(b, last);
  double best_cost = std::numeric_limits<double>::infinity();
  for (;;) {
    std::vector<std::size_t> m(b);
    for (std::size_t i = 0; i < b; ++i) m[i] = values[idx[i]];
    const double c = cost(m);
    if (c < best_cost) {
      best_cost = c;
      best = m;
    }
    std::size_t i = 0;
    while (i < b && ++idx[i] == values.size()) idx[i++] = 0;
    if (i == b) break;
  }
  for (std::size_t step = stride / 2; step >= 1; step /= 2) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (std::size_t i = 0; i < b; ++i) {
        for (int sign : {-1, 1}) {
          std::vector<std::size_t> m = best;
          const auto moved = static_cast<long long>(m[i]) + sign * static_cast<long long>(step);
          if (moved < 1 || moved > static_cast<long long>(last)) continue;
          m[i] = static_cast<std::size_t>(moved);
          const double c = cost(m);
          if (c < best_cost) {
            best_cost = c;
            best = std::move(m);
            improved = true;
          }
        }
      }
    }
  }
  return best;
}

void validate(const VariationalProblem& p) {
  if (p.steps == 0) throw InvalidParameter("variational problem needs at least one step");
  if (p.starts.empty()) throw InvalidParameter("variational problem needs start values");
  for (double s : p.starts) {
    if (!std::isfinite(s)) throw InvalidParameter("start values must be finite");
  }
}

}  // namespace

VariationalSolution minimize_rate(const VariationalProblem& p, const Tolerances& tol) {
  validate(p);
  Setup su;
  bool merging = false;

  if (p.functional == Functional::schilder_1d) {
    if (p.starts.size() != 1) throw InvalidParameter("schilder_1d takes a single start");
    if (const auto* e = std::get_if<EndpointAtLeast>(&p.constraint)) {
      if (e->particle != 0) throw InvalidParameter("schilder_1d has only particle 0");
      su = reach_setup(p.starts, p.steps, HittingSet::halfspace(Eigen::VectorXd::Ones(1), e->c), p.steps, false);
    } else if (const auto* e = std::get_if<EndpointInBox>(&p.constraint)) {
      su = reach_setup(p.starts, p.steps, HittingSet::box(e->box.lo, e->box.hi), p.steps, false);
    } else {
      throw InvalidParameter("schilder_1d supports endpoint constraints only");
    }
  } else if (p.functional == Functional::stopped) {
    const auto* h = std::get_if<HitSetBy>(&p.constraint);
    if (!h) throw InvalidParameter("stopped functional supports hit_set_by only");
    if (h->set.dimension() != p.starts.size()) throw InvalidParameter("hitting set and start differ in dimension");
    const Eigen::Map<const Eigen::VectorXd> start(p.starts.data(), static_cast<Eigen::Index>(p.starts.size()));
    const std::size_t last = last_index(h->t_c, p.steps);
    if (h->set.contains(start)) {
      su = reach_setup(p.starts, p.steps, h->set, 0, true);
      su.project = [](Eigen::VectorXd&) {};
    } else {
      if (last == 0) throw InfeasibleProblem("hit_set_by: no grid time at or before t_c");
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_m = last;
      for (std::size_t m = 1; m <= last; ++m) {
        const double c = least_norm_cost(reach_setup(p.starts, p.steps, h->set, m, true));
        if (c < best) {
          best = c;
          best_m = m;
        }
      }
      su = reach_setup(p.starts, p.steps, h->set, best_m, true);
    }
  } else {
    const auto* c = std::get_if<CoalesceBy>(&p.constraint);
    if (!c) throw InvalidParameter("npoint_coalescing supports coalesce_by only");
    if (p.starts.size() > 4) throw InvalidParameter("npoint_coalescing enumerates merge orders for n <= 4 only");
    for (std::size_t k = 1; k < p.starts.size(); ++k) {
      if (!(p.starts[k] > p.starts[k - 1])) throw InvalidParameter("starts must be strictly increasing");
    }
    const std::size_t last = last_index(c->t_c, p.steps);
    if (last == 0 && p.starts.size() > 1) throw InfeasibleProblem("coalesce_by: no grid time at or before t_c");
    su = merge_setup(p.starts, p.steps, best_merges(p.starts, p.steps, last));
    merging = true;
  }

  const auto n = static_cast<Eigen::Index>(su.size());
  Descent best;
  best.value = std::numeric_limits<double>::infinity();
  for (std::size_t q = 0; q < std::max<std::size_t>(tol.multistarts, 1); ++q) {
    Rng rng(tol.seed, q);
    Eigen::VectorXd v0(n);
    for (Eigen::Index i = 0; i < n; ++i) v0[i] = su.active[static_cast<std::size_t>(i)] ? 0.5 * rng.normal() : 0.0;
    Descent d = descend(su, std::move(v0), tol);
    if (d.value < best.value) best = std::move(d);
  }

  VariationalSolution out{.path = build_path(su, best.v, merging), .event_times = {}};
  out.value = best.value;
  out.gradient_norm = best.gradient_norm;
  out.grad_check = gradient_check(su, best.v);
  out.iterations = best.iterations;
  out.converged = best.converged;
  for (std::size_t m : su.events) out.event_times.push_back(static_cast<double>(m) * su.dt);
  return out;
}

}  // namespace flowldp
