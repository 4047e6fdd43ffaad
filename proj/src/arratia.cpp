#include "flowldp/arratia.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "flowldp/error.hpp"

namespace flowldp {

std::size_t CoalescenceRecord::representative(std::size_t particle, double t) const {
  if (particle >= particles()) throw InvalidParameter("representative: particle index out of range");
  std::size_t k = particle;
  while (k > 0 && met[k] && tau[k] <= t) --k;
  return k;
}

std::size_t CoalescenceRecord::clusters(double t) const {
  std::size_t c = particles();
  for (std::size_t k = 1; k < particles(); ++k) {
    if (met[k] && tau[k] <= t) --c;
  }
  return c;
}

CoalescenceRecord CoalescenceRecord::from_meetings(
    std::vector<double> starts, std::span<const std::optional<double>> boundary_times) {
  if (starts.empty()) throw InvalidParameter("from_meetings: no particles");
  if (boundary_times.size() + 1 != starts.size()) {
    throw InvalidParameter("from_meetings: need one meeting time per consecutive pair");
  }
  CoalescenceRecord r;
  const std::size_t n = starts.size();
  r.starts = std::move(starts);
  r.tau.assign(n, 1.0);
  r.met.assign(n, false);
  r.proposal.assign(n, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 1; k < n; ++k) {
    const auto& m = boundary_times[k - 1];
    if (!m) continue;
    if (!(*m >= 0.0 && *m <= 1.0)) throw InvalidParameter("from_meetings: meeting time outside [0, 1]");
    r.tau[k] = *m;
    r.met[k] = true;
    r.merges.push_back({*m, k - 1, k});
  }
  std::stable_sort(r.merges.begin(), r.merges.end(),
                   [](const MergeEvent& a, const MergeEvent& b) { return a.time < b.time; });
  return r;
}

namespace {

void validate_strict(std::span<const double> starts) {
  if (starts.empty()) throw InvalidParameter("simulate_arratia: need at least one start point");
  for (std::size_t i = 0; i < starts.size(); ++i) {
    if (!std::isfinite(starts[i])) throw InvalidParameter("simulate_arratia: non-finite start");
    if (i > 0 && !(starts[i] > starts[i - 1])) {
      throw InvalidParameter("simulate_arratia: starts must be strictly increasing");
    }
  }
}

}  // namespace

ArratiaSimulation simulate_arratia(std::span<const double> starts, std::size_t steps,
                                   CrossingMode mode, Rng& rng, double time_scale) {
  validate_strict(starts);
  if (steps == 0) throw InvalidParameter("simulate_arratia: need at least one step");
  if (!(time_scale > 0.0) || !std::isfinite(time_scale)) {
    throw InvalidParameter("simulate_arratia: time scale must be positive");
  }
  const std::size_t n = starts.size();
  const double dt = 1.0 / static_cast<double>(steps);
  const double var = time_scale * dt;
  const double sd = std::sqrt(var);

  ArratiaSimulation out;
  out.path.starts.assign(starts.begin(), starts.end());
  out.path.times = uniform_times(steps);
  out.path.epsilon = time_scale;
  out.path.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(steps + 1));
  out.record.starts = out.path.starts;
  out.record.tau.assign(n, 1.0);
  out.record.met.assign(n, false);
  out.record.proposal.assign(n, std::numeric_limits<double>::quiet_NaN());

  // Clusters are contiguous index ranges; head = smallest index.
  std::vector<std::size_t> heads(n);
  for (std::size_t i = 0; i < n; ++i) heads[i] = i;
  std::vector<double> pos(starts.begin(), starts.end());
  std::vector<double> next(n);
  std::vector<std::size_t> kept;
  kept.reserve(n);

  for (std::size_t i = 0; i < n; ++i) out.path.values(static_cast<Eigen::Index>(i), 0) = pos[i];

  for (std::size_t j = 0; j < steps; ++j) {
    const std::size_t c = heads.size();
    for (std::size_t q = 0; q < c; ++q) next[q] = pos[q] + sd * rng.normal();

    const double t_end = out.path.times[j + 1];
    kept.clear();
    std::size_t write = 0;
    for (std::size_t q = 0; q < c; ++q) {
      if (write > 0) {
        const std::size_t l = write - 1;
        const double gap_new = next[q] - next[l];
        bool merge = gap_new <= 0.0;
        if (!merge && mode == CrossingMode::bridge) {
          const double gap_old = pos[q] - pos[l];
          merge = rng.uniform() <= std::exp(-gap_old * gap_new / var);
        }
        if (merge) {
          const std::size_t k = heads[q];
          out.record.tau[k] = t_end;
          out.record.met[k] = true;
          out.record.proposal[k] = next[q];
          out.record.merges.push_back({t_end, k - 1, k});
          continue;
        }
      }
      heads[write] = heads[q];
      pos[write] = pos[q];
      next[write] = next[q];
      ++write;
    }
    heads.resize(write);
    for (std::size_t q = 0; q < write; ++q) pos[q] = next[q];

    for (std::size_t q = 0; q < write; ++q) {
      const std::size_t end = q + 1 < write ? heads[q + 1] : n;
      for (std::size_t i = heads[q]; i < end; ++i) {
        out.path.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) = pos[q];
      }
    }
  }
  return out;
}

ArratiaSimulation simulate_arratia(std::span<const double> starts, std::size_t steps,
                                   CrossingMode mode, std::uint64_t seed, double time_scale) {
  Rng rng(seed);
  return simulate_arratia(starts, steps, mode, rng, time_scale);
}

double total_free_time(const CoalescenceRecord& record, std::span<const double> partition) {
  if (partition.empty()) throw InvalidParameter("total_free_time: empty partition");
  std::vector<std::size_t> idx;
  idx.reserve(partition.size());
  for (double p : partition) {
    const auto it = std::lower_bound(record.starts.begin(), record.starts.end(),
                                     p - 1e-12 * std::max(1.0, std::abs(p)));
    if (it == record.starts.end() || std::abs(*it - p) > 1e-12 * std::max(1.0, std::abs(p))) {
      throw InvalidParameter("total_free_time: partition point " + std::to_string(p) +
                             " is not a simulated start");
    }
    const auto i = static_cast<std::size_t>(it - record.starts.begin());
    if (!idx.empty() && i <= idx.back()) {
      throw InvalidParameter("total_free_time: partition must be strictly increasing");
    }
    idx.push_back(i);
  }
  double sum = 1.0;
  for (std::size_t m = 1; m < idx.size(); ++m) {
    double meet = 0.0;
    for (std::size_t k = idx[m - 1] + 1; k <= idx[m]; ++k) {
      if (!record.met[k]) {
        meet = 1.0;
        break;
      }
      meet = std::max(meet, record.tau[k]);
    }
    sum += std::min(meet, 1.0);
  }
  return sum;
}

std::vector<double> midpoint_cells(std::span<const double> starts) {
  const std::size_t n = starts.size();
  std::vector<double> cells(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = i == 0 ? 0.0 : 0.5 * (starts[i - 1] + starts[i]);
    const double hi = i + 1 == n ? 1.0 : 0.5 * (starts[i] + starts[i + 1]);
    cells[i] = std::max(0.0, std::clamp(hi, 0.0, 1.0) - std::clamp(lo, 0.0, 1.0));
  }
  return cells;
}

DiscreteMeasure empirical_measure(const FlowPath& path, const CoalescenceRecord& record,
                                  double t, std::span<const double> cell_lengths) {
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidParameter("empirical_measure: t must lie in [0, 1]");
  const std::size_t n = path.particles();
  if (record.particles() != n) throw InvalidParameter("empirical_measure: record/path size mismatch");
  std::vector<double> cells;
  if (cell_lengths.empty()) {
    cells = midpoint_cells(path.starts);
  } else {
    if (cell_lengths.size() != n) throw InvalidParameter("empirical_measure: one cell length per particle");
    cells.assign(cell_lengths.begin(), cell_lengths.end());
  }

  // Linear interpolation between grid columns.
  const std::size_t steps = path.steps();
  const double s = t * static_cast<double>(steps);
  const std::size_t j0 = std::min(static_cast<std::size_t>(std::floor(s)), steps);
  const std::size_t j1 = std::min(j0 + 1, steps);
  const double w = s - static_cast<double>(j0);
  auto value = [&](std::size_t i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double a = path.values(r, static_cast<Eigen::Index>(j0));
    const double b = path.values(r, static_cast<Eigen::Index>(j1));
    return w == 0.0 ? a : a + w * (b - a);
  };

  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t rep = record.representative(i, t);
    if (rep == i) {
      atoms.push_back({value(i), cells[i]});
    } else {
      atoms.back().mass += cells[i];  // representatives are contiguous to the left
    }
  }
  return DiscreteMeasure::from_atoms(std::move(atoms));
}

double girsanov_density(const FlowPath& path, const CoalescenceRecord& record,
                        const std::function<double(double)>& drift) {
  const std::size_t n = path.particles();
  if (record.particles() != n) throw InvalidParameter("girsanov_density: record/path size mismatch");
  double log_density = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double tau = k == 0 ? 1.0 : record.tau[k];
    const auto r = static_cast<Eigen::Index>(k);
    for (std::size_t j = 0; j < path.steps(); ++j) {
      if (!(path.times[j] < tau)) break;
      const double x = path.values(r, static_cast<Eigen::Index>(j));
      const double c = drift(x);
      if (!std::isfinite(c)) {
        throw InvalidParameter("girsanov_density: non-finite drift at x = " + std::to_string(x));
      }
      double end = path.values(r, static_cast<Eigen::Index>(j + 1));
      if (k > 0 && record.met[k] && path.times[j + 1] >= tau && k < record.proposal.size() &&
          std::isfinite(record.proposal[k])) {
        end = record.proposal[k];
      }
      const double dx = end - x;
      const double ds = path.epsilon * (path.times[j + 1] - path.times[j]);
      log_density += c * dx - 0.5 * c * c * ds;
    }
  }
  return std::exp(log_density);
}

}  // namespace flowldp
