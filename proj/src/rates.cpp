#include "flowldp/rates.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "flowldp/error.hpp"
#include "flowldp/fft.hpp"

namespace flowldp {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTopOctaveShare = 0.01;
// Spectral integrals stop where |F phi| falls below this. Past it, rounding-level
// errors in sampled data (~1e-13) times 1/|F phi|^2 swamp any genuine content.
constexpr double kRateFloor = 1e-8;

double rate_lambda_max(const Kernel& k) { return frequency_grid(k, 4096, kRateFloor).lambda_max; }

bool near(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

// Precomputed FFT and 1/|F phi|^2 weights for profiles of one length and step.
class SpectralCharge {
 public:
  SpectralCharge(const Kernel& k, double lambda_max, double step, std::size_t n)
      : plan_(next_pow2(4 * n), FftPlan::Direction::forward), step_(step) {
    if (!(step > 0.0)) throw InvalidParameter("spatial step must be positive");
    if (kPi / step <= lambda_max) {
      throw InvalidParameter("spatial step too coarse: Nyquist frequency " +
                             std::to_string(kPi / step) + " does not cover the kernel's lambda_max " +
                             std::to_string(lambda_max));
    }
    const std::size_t p = plan_.size();
    const double dl = 2.0 * kPi / (static_cast<double>(p) * step);
    dlambda_ = dl;
    weight_.assign(p, 0.0);
    top_.assign(p, false);
    for (std::size_t m = 0; m < p; ++m) {
      const double idx = m < p / 2 ? static_cast<double>(m) : static_cast<double>(m) - static_cast<double>(p);
      const double lambda = idx * dl;
      if (std::abs(lambda) > lambda_max) continue;
      const double f = std::abs(k.transform(lambda));
      weight_[m] = 1.0 / (f * f);
      top_[m] = std::abs(lambda) >= 0.5 * lambda_max;
    }
  }

  SpectralEnergy operator()(std::span<const double> g) const {
    const auto x = plan_.execute_real(g);
    SpectralEnergy e;
    for (std::size_t m = 0; m < x.size(); ++m) {
      if (weight_[m] == 0.0) continue;
      const double c = std::norm(x[m]) * step_ * step_ * weight_[m] * dlambda_;
      e.total += c;
      if (top_[m]) e.top_octave += c;
    }
    return e;
  }

 private:
  FftPlan plan_;
  double step_;
  double dlambda_ = 0.0;
  std::vector<double> weight_;
  std::vector<bool> top_;
};

double uniform_step(std::span<const double> u) {
  if (u.size() < 2) throw InvalidParameter("spatial grid needs at least two points");
  const double step = (u.back() - u.front()) / static_cast<double>(u.size() - 1);
  if (!(step > 0.0)) throw InvalidParameter("spatial grid must be increasing");
  for (std::size_t i = 1; i < u.size(); ++i) {
    if (std::abs(u[i] - u[i - 1] - step) > 1e-9 * step) throw InvalidParameter("spatial grid must be uniform");
  }
  return step;
}

void validate_times(std::span<const double> t) {
  if (t.size() < 2 || t.front() != 0.0 || t.back() != 1.0) {
    throw InvalidParameter("time grid must run from 0 to 1 with at least two points");
  }
  for (std::size_t j = 1; j < t.size(); ++j) {
    if (!(t[j] > t[j - 1])) throw InvalidParameter("time grid must be strictly increasing");
  }
}

// Weights of the first derivative at z from values at nodes x (Fornberg's recursion).
std::vector<double> derivative_weights(double z, std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::vector<double>> c(n, std::vector<double>(2, 0.0));
  c[0][0] = 1.0;
  double c1 = 1.0;
  double c4 = x[0] - z;
  for (std::size_t i = 1; i < n; ++i) {
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - z;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        c[i][1] = c1 * (c[i - 1][0] - c5 * c[i - 1][1]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      c[j][1] = (c4 * c[j][1] - c[j][0]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = c[i][1];
  return w;
}

// Time derivative of each row from the five nearest samples (fourth order); grids
// shorter than five points use three. Derivative errors leave the kernel's image
// and get amplified spectrally, so the order matters.
Eigen::MatrixXd time_derivative(const Eigen::MatrixXd& x, std::span<const double> t) {
  const auto m = static_cast<std::size_t>(x.cols());
  const std::size_t width = std::min<std::size_t>(m, m >= 5 ? 5 : 3);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(x.rows(), x.cols());
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t first = std::min(j >= width / 2 ? j - width / 2 : 0, m - width);
    const auto w = derivative_weights(t[j], t.subspan(first, width));
    for (std::size_t q = 0; q < width; ++q) {
      d.col(static_cast<Eigen::Index>(j)) += w[q] * x.col(static_cast<Eigen::Index>(first + q));
    }
  }
  return d;
}

double trapezoid(std::span<const double> t, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t j = 1; j < t.size(); ++j) s += 0.5 * (t[j] - t[j - 1]) * (y[j] + y[j - 1]);
  return s;
}

RateValue from_spectral(double total, double top, double prefactor) {
  if (!std::isfinite(total) || (total > 0.0 && top > kTopOctaveShare * total)) {
    return RateValue::infinite(InfiniteReason::fourier_divergence);
  }
  return RateValue::finite(prefactor * total);
}


// Derivative of samples y at each node, from the `width` nearest nodes.
std::vector<double> node_derivative(std::span<const double> x, std::span<const double> y, std::size_t width) {
  const std::size_t n = x.size();
  width = std::min(width, n);
  std::vector<double> d(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t first = std::min(j >= width / 2 ? j - width / 2 : 0, n - width);
    const auto w = derivative_weights(x[j], x.subspan(first, width));
    for (std::size_t q = 0; q < width; ++q) d[j] += w[q] * y[first + q];
  }
  return d;
}

// Quadrature nodes x_i = h(u_i, t) for integrals over x, through the substitution
// dx = dh/du du: trapezoid weights in u times a 17-point derivative estimate.
void flow_quadrature(std::span<const double> starts, const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                     std::vector<double>& xs, std::vector<double>& ws, std::vector<double>& vs) {
  const std::size_t n = starts.size();
  xs.assign(x.data(), x.data() + n);
  vs.assign(v.data(), v.data() + n);
  ws.assign(n, 0.0);
  if (n == 1) return;
  std::vector<double> disp(n);
  for (std::size_t i = 0; i < n; ++i) disp[i] = xs[i] - starts[i];
  const auto dd = node_derivative(starts, disp, 17);
  for (std::size_t i = 0; i < n; ++i) {
    const double left = i > 0 ? starts[i] - starts[i - 1] : 0.0;
    const double right = i + 1 < n ? starts[i + 1] - starts[i] : 0.0;
    ws[i] = 0.5 * (left + right) * (1.0 + dd[i]);
  }
}

// Beyond the outermost particles v decays like the kernel: v_edge * phi(x - x_edge) / phi(0).
void append_tails(const Kernel& k, double peak, double reach, std::vector<double>& xs,
                  std::vector<double>& ws, std::vector<double>& vs) {
  const std::size_t n = xs.size();
  double step = n > 1 ? (xs.back() - xs.front()) / static_cast<double>(n - 1) : 0.1;
  step = std::min(step, 0.1);
  const auto count = static_cast<std::size_t>(std::ceil(reach / step));
  const double x0 = xs.front();
  const double x1 = xs.back();
  const double v0 = vs.front();
  const double v1 = vs.back();
  if (n == 1) ws[0] = step;
  for (std::size_t q = 1; q <= count; ++q) {
    const double off = step * static_cast<double>(q);
    const double w = q == count ? 0.5 * step : step;
    xs.push_back(x0 - off);
    vs.push_back(v0 * k(-off) / peak);
    ws.push_back(w);
    xs.push_back(x1 + off);
    vs.push_back(v1 * k(off) / peak);
    ws.push_back(w);
  }
  if (n > 1) {
    ws[0] += 0.5 * step;
    ws[n - 1] += 0.5 * step;
  }
}

}  // namespace

std::string_view to_string(InfiniteReason r) {
  switch (r) {
    case InfiniteReason::wrong_start: return "wrong_start";
    case InfiniteReason::not_in_image_of_map: return "not_in_image_of_map";
    case InfiniteReason::non_square_integrable_derivative: return "non_square_integrable_derivative";
    case InfiniteReason::fourier_divergence: return "fourier_divergence";
  }
  return "unknown";
}

RateValue RateValue::finite(double v) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidParameter("finite rate must be a nonnegative real");
  return RateValue(v);
}

double RateValue::value() const {
  return reason_ ? std::numeric_limits<double>::infinity() : value_;
}

SpectralEnergy spectral_energy(const Kernel& k, double step, std::span<const double> g) {
  return SpectralCharge(k, rate_lambda_max(k), step, g.size())(g);
}

EnergyCheck energy_check(std::span<const double> times, std::span<const double> values) {
  if (times.size() != values.size()) throw InvalidParameter("energy_check: size mismatch");
  EnergyCheck e;
  const std::size_t n = times.size();
  for (std::size_t j = 1; j < n; ++j) {
    const double d = values[j] - values[j - 1];
    e.fine += d * d / (times[j] - times[j - 1]);
  }
  std::size_t prev = 0;
  for (std::size_t j = 2; j < n + 1; j += 2) {
    const std::size_t c = std::min(j, n - 1);
    if (c == prev) break;
    const double d = values[c] - values[prev];
    e.coarse += d * d / (times[c] - times[prev]);
    prev = c;
  }
  if (n >= 2 && prev != n - 1) {
    const double d = values[n - 1] - values[prev];
    e.coarse += d * d / (times[n - 1] - times[prev]);
  }
  if (n > kMinEnergySegments) {
    e.stable = std::abs(e.fine - e.coarse) <= 0.1 * std::max(e.fine, e.coarse) + 1e-12;
  }
  return e;
}

RateValue rate_gaussian_field(const Kernel& k, const SpatialField& h) {
  validate_times(h.times);
  if (static_cast<std::size_t>(h.values.rows()) != h.u.size() ||
      static_cast<std::size_t>(h.values.cols()) != h.times.size()) {
    throw InvalidParameter("rate_gaussian_field: values must be |u| x |t|");
  }
  const double step = uniform_step(h.u);
  for (std::size_t i = 0; i < h.u.size(); ++i) {
    if (!near(h.values(static_cast<Eigen::Index>(i), 0), h.u[i])) {
      return RateValue::infinite(InfiniteReason::wrong_start);
    }
  }
  const Eigen::Map<const Eigen::VectorXd> u(h.u.data(), static_cast<Eigen::Index>(h.u.size()));
  const Eigen::MatrixXd disp = h.values.colwise() - u;
  const Eigen::MatrixXd rate = time_derivative(disp, h.times);

  const SpectralCharge charge(k, rate_lambda_max(k), step, h.u.size());
  std::vector<double> total(h.times.size());
  std::vector<double> top(h.times.size());
  std::vector<double> col(h.u.size());
  for (std::size_t j = 0; j < h.times.size(); ++j) {
    Eigen::Map<Eigen::VectorXd>(col.data(), rate.rows()) = rate.col(static_cast<Eigen::Index>(j));
    const SpectralEnergy e = charge(col);
    total[j] = e.total;
    top[j] = e.top_octave;
  }
  return from_spectral(trapezoid(h.times, total), trapezoid(h.times, top), 1.0 / (4.0 * kPi));
}

RateValue rate_fixed_time(const Kernel& k, std::span<const double> u, std::span<const double> g,
                          double t) {
  if (!(t > 0.0 && t <= 1.0)) throw InvalidParameter("rate_fixed_time: t must lie in (0, 1]");
  if (u.size() != g.size()) throw InvalidParameter("rate_fixed_time: grid and values differ in length");
  const double step = uniform_step(u);
  const SpectralEnergy e = SpectralCharge(k, rate_lambda_max(k), step, g.size())(g);
  return from_spectral(e.total, e.top_octave, 1.0 / (4.0 * kPi * t));
}

RateValue rate_flow(const Kernel& k, const FlowPath& h) {
  const std::size_t n = h.particles();
  validate_times(h.times);
  if (n == 0 || static_cast<std::size_t>(h.values.rows()) != n ||
      static_cast<std::size_t>(h.values.cols()) != h.times.size()) {
    throw InvalidParameter("rate_flow: values must be particles x times");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!near(h.values(static_cast<Eigen::Index>(i), 0), h.starts[i])) {
      return RateValue::infinite(InfiniteReason::wrong_start);
    }
  }
  for (Eigen::Index j = 0; j < h.values.cols(); ++j) {
    for (Eigen::Index i = 1; i < h.values.rows(); ++i) {
      if (!(h.values(i, j) > h.values(i - 1, j))) return RateValue::infinite(InfiniteReason::not_in_image_of_map);
    }
  }
  const Eigen::Map<const Eigen::VectorXd> u(h.starts.data(), static_cast<Eigen::Index>(n));
  const Eigen::MatrixXd vel = time_derivative(h.values.colwise() - u, h.times);

  // F v is integrated over particle labels through x = h(u, t), which needs no
  // resampling of v: any interpolation error would be amplified by 1/|F phi|^2.
  const FrequencyGrid grid = frequency_grid(k, 1024, kRateFloor);
  std::vector<double> lambdas;
  std::vector<double> weights;
  for (double l : grid.lambda) {
    if (l < 0.0) continue;
    const double f = std::abs(k.transform(l));
    lambdas.push_back(l);
    weights.push_back((l == 0.0 ? 1.0 : 2.0) * grid.step / (f * f));
  }
  const double peak = k(0.0);
  const double reach = k.support_radius();

  std::vector<double> total(h.times.size());
  std::vector<double> top(h.times.size());
  std::vector<double> xs;
  std::vector<double> ws;
  std::vector<double> vs;
  std::vector<std::complex<double>> fv(lambdas.size());
  for (std::size_t j = 0; j < h.times.size(); ++j) {
    const auto c = static_cast<Eigen::Index>(j);
    flow_quadrature(h.starts, h.values.col(c), vel.col(c), xs, ws, vs);
    append_tails(k, peak, reach, xs, ws, vs);
    std::fill(fv.begin(), fv.end(), std::complex<double>(0.0, 0.0));
    const double dl = lambdas.size() > 1 ? lambdas[1] - lambdas[0] : 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double a = ws[i] * vs[i];
      if (a == 0.0) continue;
      const std::complex<double> rot = std::polar(1.0, -dl * xs[i]);
      std::complex<double> e(1.0, 0.0);
      for (std::size_t q = 0; q < lambdas.size(); ++q) {
        if (q % 64 == 0) e = std::polar(1.0, -lambdas[q] * xs[i]);
        fv[q] += a * e;
        e *= rot;
      }
    }
    for (std::size_t q = 0; q < lambdas.size(); ++q) {
      const double cq = std::norm(fv[q]) * weights[q];
      total[j] += cq;
      if (lambdas[q] >= 0.5 * grid.lambda_max) top[j] += cq;
    }
  }
  return from_spectral(trapezoid(h.times, total), trapezoid(h.times, top), 1.0 / (4.0 * kPi));
}

RateValue rate_stopped(const PiecewiseLinearPath& g, const HittingSet& b, const Eigen::VectorXd& start) {
  if (static_cast<std::size_t>(start.size()) != g.dimension()) {
    throw InvalidParameter("rate_stopped: start point dimension mismatch");
  }
  if ((g.values().col(0) - start).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, start.cwiseAbs().maxCoeff())) {
    return RateValue::infinite(InfiniteReason::wrong_start);
  }
  if (sup_distance(stop_map(g, b), g) > 1e-12) return RateValue::infinite(InfiniteReason::not_in_image_of_map);
  const auto& t = g.times();
  double e = 0.0;
  for (std::size_t j = 1; j < t.size(); ++j) {
    const auto c = static_cast<Eigen::Index>(j);
    e += (g.values().col(c) - g.values().col(c - 1)).squaredNorm() / (t[j] - t[j - 1]);
  }
  return RateValue::finite(0.5 * e);
}

RateValue rate_npoint(const PiecewiseLinearPath& f, std::span<const double> starts) {
  const std::size_t n = f.dimension();
  if (starts.size() != n) throw InvalidParameter("rate_npoint: one start per path required");
  for (std::size_t k = 1; k < n; ++k) {
    if (!(starts[k] > starts[k - 1])) throw InvalidParameter("rate_npoint: starts must be strictly increasing");
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!near(f.value(k, 0), starts[k])) return RateValue::infinite(InfiniteReason::wrong_start);
  }
  const CoalescedPaths proj = coalescing_projection(f);
  if (sup_distance(proj.paths, f) > 1e-12) return RateValue::infinite(InfiniteReason::not_in_image_of_map);

  const auto& t = f.times();
  std::vector<double> row(t.size());
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < t.size(); ++j) row[j] = f.value(k, j);
    if (!energy_check(t, row).stable) {
      return RateValue::infinite(InfiniteReason::non_square_integrable_derivative);
    }
    const double tau = k == 0 ? 1.0 : proj.tau[k];
    for (std::size_t j = 1; j < t.size(); ++j) {
      const double len = std::min(t[j], tau) - t[j - 1];
      if (len <= 0.0) break;
      const double slope = (row[j] - row[j - 1]) / (t[j] - t[j - 1]);
      total += slope * slope * len;
    }
  }
  return RateValue::finite(0.5 * total);
}

DyadicRates rate_dyadic(const ForestSkeleton& s, std::size_t n_max) {
  if (n_max == 0 || n_max > s.level) {
    throw InvalidParameter("rate_dyadic: n_max must lie in 1..skeleton level");
  }
  if (static_cast<std::size_t>(s.values.rows()) != s.rows() ||
      static_cast<std::size_t>(s.values.cols()) != s.times.size()) {
    throw InvalidParameter("rate_dyadic: skeleton shape does not match its level and time grid");
  }
  DyadicRates out;
  const bool valid = s.is_monotone();
  double best = 0.0;
  for (std::size_t n = 1; n <= n_max; ++n) {
    RateValue r = RateValue::infinite(InfiniteReason::not_in_image_of_map);
    if (valid) {
      const std::size_t stride = std::size_t{1} << (s.level - n);
      const std::size_t count = (std::size_t{1} << n) + 1;
      Eigen::MatrixXd v(static_cast<Eigen::Index>(count), s.values.cols());
      std::vector<double> starts(count);
      for (std::size_t q = 0; q < count; ++q) {
        v.row(static_cast<Eigen::Index>(q)) = s.values.row(static_cast<Eigen::Index>(q * stride));
        starts[q] = s.point(q * stride);
      }
      r = rate_npoint(PiecewiseLinearPath(s.times, std::move(v)), starts);
    }
    if (!out.levels.empty() && r.value() < out.levels.back().value()) out.nondecreasing = false;
    best = std::max(best, r.value());
    out.running_max.push_back(best);
    out.levels.push_back(r);
  }
  out.sup = valid ? out.levels.back() : RateValue::infinite(InfiniteReason::not_in_image_of_map);
  if (valid) {
    const auto it = std::max_element(out.levels.begin(), out.levels.end(),
                                     [](const RateValue& a, const RateValue& b) { return a.value() < b.value(); });
    out.sup = *it;
  }
  return out;
}

}  // namespace flowldp
