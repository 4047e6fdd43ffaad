#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "flowldp/arratia.hpp"
#include "flowldp/flow_sim.hpp"
#include "flowldp/io.hpp"
#include "flowldp/kernels.hpp"
#include "flowldp/metrics.hpp"
#include "flowldp/pathmaps.hpp"
#include "flowldp/varmin.hpp"

namespace flowldp {

enum class Simulator { smooth, arratia, stopped };

struct EndpointEvent {
  double c;
  std::size_t particle = 0;
};
struct CoalesceEvent {
  double t_c;  // all particles in one cluster by t_c
};
struct HitEvent {
  HittingSet set;  // in the space of particle positions (or coordinates, for stopped)
  double t_c;
};
struct BallEvent {
  enum class Norm { sup, weighted };
  // Center path h(u_i, t) = u_i + center_velocity[i] * t (one entry broadcasts).
  std::vector<double> center_velocity;
  double delta;
  Norm norm = Norm::sup;
};

using EventSpec = std::variant<EndpointEvent, CoalesceEvent, HitEvent, BallEvent>;

struct ExperimentConfig {
  std::string name;
  Simulator simulator = Simulator::smooth;
  std::optional<Kernel> kernel;
  std::vector<double> starts;
  bool gauss_hermite_starts = false;
  std::optional<WeightedNorm> weighted_norm;  // set with gauss_hermite starts
  EventSpec event = EndpointEvent{1.0, 0};
  std::vector<double> epsilon_list;
  std::size_t steps = 16;
  std::size_t replicas = 1000;
  std::uint64_t seed = 1;
  SimMode mode = SimMode::direct();
  CrossingMode crossing = CrossingMode::bridge;
  std::optional<double> prediction;
  std::optional<VariationalProblem> prediction_problem;
  double fit_prefactor = 0.5;  // kappa in the fit model, see ldp_report
  std::filesystem::path output_dir = "out";
  std::vector<double> measure_times{0.0, 0.25, 0.5, 0.75, 1.0};
  std::uint64_t config_hash = 0;
};

// Parses and validates; throws ConfigError.
ExperimentConfig config_from_json(const Json& j);
ExperimentConfig load_config(const std::filesystem::path& file);

struct SweepRow {
  double epsilon;
  std::size_t hits;
  std::size_t replicas;
  double p_hat;
  double std_error;       // Wilson half-width (z = 1)
  double eps_log_p;       // -inf when hits == 0
  double predicted_rate;  // NaN when no prediction is configured
};

// Predicted rate: the configured number, or minimize_rate on the configured problem.
std::optional<double> predicted_rate(const ExperimentConfig& cfg);

// Whether one simulated replica lands in the event. Replica r of epsilon index e draws
// from Rng(stream_seed(seed, e), r), so results do not depend on the worker count.
bool replica_hits(const ExperimentConfig& cfg, double epsilon, Rng& rng);

std::vector<SweepRow> mc_rare_event(const ExperimentConfig& cfg, std::size_t workers);

struct LdpReport {
  double extrapolated_rate;  // -intercept of the fit
  double slope;              // first-order coefficient a
  double prefactor;          // kappa
  std::optional<double> prediction;
  std::optional<double> relative_gap;
  std::size_t rows_used;
};

// Weighted least squares of eps ln p - kappa eps ln eps = -I + a eps over rows with
// 0 < hits; weights 1 / (eps * stderr / p_hat)^2. kappa = 0 is the plain affine model.
// Throws InvalidParameter with fewer than 3 usable rows.
LdpReport ldp_report(const std::vector<SweepRow>& rows, std::optional<double> prediction,
                     double prefactor = 0.5);

Json to_json(const LdpReport& r);

void write_sweep_csv(const std::filesystem::path& file, const std::vector<SweepRow>& rows);
Json manifest(const ExperimentConfig& cfg);

// Sample-path dumps.
void write_smooth_paths(const ExperimentConfig& cfg, double epsilon, std::size_t replicas,
                        const std::filesystem::path& file);

struct ArratiaOutputs {
  std::filesystem::path merges;
  std::filesystem::path measures;
  std::filesystem::path gamma;  // empty when starts are not a dyadic grid
  std::filesystem::path paths;  // empty unless requested
};

ArratiaOutputs write_arratia_outputs(const ExperimentConfig& cfg, double epsilon,
                                     std::size_t replicas, bool with_paths);

// Dyadic levels available for Gamma: starts must be k / 2^L, k = 0..2^L. Returns L or nullopt.
std::optional<std::size_t> dyadic_level(const std::vector<double>& starts);

// total_free_time at dyadic levels 0..L for one record.
std::vector<double> gamma_levels(const CoalescenceRecord& record, std::size_t level);

}  // namespace flowldp
