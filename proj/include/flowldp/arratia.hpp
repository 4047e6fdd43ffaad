#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "flowldp/flow_sim.hpp"
#include "flowldp/measure.hpp"
#include "flowldp/rng.hpp"

namespace flowldp {

enum class CrossingMode {
  bridge,  // also merges ordered neighbours whose difference bridge crossed zero
  naive,   // merges only on an observed sign change
};

struct MergeEvent {
  double time;
  std::size_t left;   // particle k - 1
  std::size_t right;  // particle k
};

/// Meeting structure of a coalescing system of particles u_0 < ... < u_{n-1}.
/// Boundary k (between particles k-1 and k) closes at tau[k]; tau[0] = 1 by
/// convention and unmet boundaries carry tau = 1 with met[k] = false.
struct CoalescenceRecord {
  std::vector<double> starts;
  std::vector<double> tau;
  std::vector<bool> met;
  std::vector<MergeEvent> merges;  // in time order
  // Position particle k's cluster had drawn for tau[k] before it was absorbed
  // (NaN when unmet or unknown). Keeps the Girsanov weight of the merge step exact.
  std::vector<double> proposal;

  std::size_t particles() const { return starts.size(); }
  // Smallest-index particle sharing particle's position at time t.
  std::size_t representative(std::size_t particle, double t) const;
  std::size_t clusters(double t) const;

  // Builds a record from meeting times of consecutive particles; nullopt = never met.
  static CoalescenceRecord from_meetings(std::vector<double> starts,
                                         std::span<const std::optional<double>> boundary_times);
};

struct ArratiaSimulation {
  FlowPath path;
  CoalescenceRecord record;
};

// Coalescing Brownian particles run on the time window [0, time_scale], with the
// output time axis relabelled to [0, 1] (x(u, time_scale * t)).
ArratiaSimulation simulate_arratia(std::span<const double> starts, std::size_t steps,
                                   CrossingMode mode, Rng& rng, double time_scale = 1.0);
ArratiaSimulation simulate_arratia(std::span<const double> starts, std::size_t steps,
                                   CrossingMode mode, std::uint64_t seed,
                                   double time_scale = 1.0);

// Sum of meeting times of consecutive partition points, leftmost counted as 1.
// Every partition point must be one of the record's start points.
double total_free_time(const CoalescenceRecord& record, std::span<const double> partition);

// Image of Lebesgue measure under x(., t). Particle i carries the mass
// cell_lengths[i]; when empty, cells are delimited by midpoints between
// consecutive starts, clipped to [0, 1].
DiscreteMeasure empirical_measure(const FlowPath& path, const CoalescenceRecord& record,
                                  double t, std::span<const double> cell_lengths = {});

// Midpoint cells of sorted starts in [0, 1].
std::vector<double> midpoint_cells(std::span<const double> starts);

// Likelihood ratio of the drifted coalescing system against the driftless one,
// accumulated along each particle's free segment [0, tau_k).
double girsanov_density(const FlowPath& path, const CoalescenceRecord& record,
                        const std::function<double(double)>& drift);

}  // namespace flowldp
