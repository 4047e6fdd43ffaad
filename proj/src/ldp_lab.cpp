#include "flowldp/ldp_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flowldp/error.hpp"
#include "flowldp/metrics.hpp"
#include "flowldp/parallel.hpp"
#include "flowldp/stats.hpp"

namespace flowldp {

namespace {

constexpr std::size_t kReplicaBlock = 1024;

template <class T>
T get(const Json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("config: missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

std::size_t dimension(const ExperimentConfig& cfg) { return cfg.starts.size(); }

void validate(const ExperimentConfig& cfg) {
  if (cfg.starts.empty()) throw ConfigError("config: starts must not be empty");
  if (cfg.epsilon_list.empty()) throw ConfigError("config: epsilon_list must not be empty");
  for (std::size_t i = 0; i < cfg.epsilon_list.size(); ++i) {
    const double e = cfg.epsilon_list[i];
    if (!(e > 0.0 && e <= 1.0)) throw ConfigError("config: epsilon values must lie in (0, 1]");
    if (i > 0 && !(e < cfg.epsilon_list[i - 1])) throw ConfigError("config: epsilon_list must be strictly decreasing");
  }
  if (cfg.replicas < 1000) throw ConfigError("config: replicas must be at least 1000");
  if (cfg.steps == 0) throw ConfigError("config: steps must be positive");
  if (cfg.simulator == Simulator::smooth && !cfg.kernel) throw ConfigError("config: smooth simulator needs a kernel");
  if (cfg.simulator != Simulator::stopped) {
    for (std::size_t i = 1; i < cfg.starts.size(); ++i) {
      if (!(cfg.starts[i] > cfg.starts[i - 1])) throw ConfigError("config: starts must be strictly increasing");
    }
  }
  const std::size_t n = dimension(cfg);
  std::visit(
      [&](const auto& ev) {
        using E = std::decay_t<decltype(ev)>;
        if constexpr (std::is_same_v<E, EndpointEvent>) {
          if (ev.particle >= n) throw ConfigError("config: endpoint event names a particle that is not simulated");
          if (cfg.simulator == Simulator::stopped) throw ConfigError("config: stopped simulator supports hit_set_by only");
        } else if constexpr (std::is_same_v<E, CoalesceEvent>) {
          if (cfg.simulator != Simulator::arratia) throw ConfigError("config: coalesce_by needs the arratia simulator");
          if (!(ev.t_c > 0.0 && ev.t_c <= 1.0)) throw ConfigError("config: t_c must lie in (0, 1]");
        } else if constexpr (std::is_same_v<E, HitEvent>) {
          if (ev.set.dimension() != n) throw ConfigError("config: hitting set dimension differs from the number of starts");
          if (!(ev.t_c > 0.0 && ev.t_c <= 1.0)) throw ConfigError("config: t_c must lie in (0, 1]");
        } else {
          if (cfg.simulator == Simulator::stopped) throw ConfigError("config: stopped simulator supports hit_set_by only");
          if (ev.center_velocity.size() != 1 && ev.center_velocity.size() != n) {
            throw ConfigError("config: center_velocity needs one entry or one per particle");
          }
          if (!(ev.delta > 0.0)) throw ConfigError("config: ball radius must be positive");
          if (ev.norm == BallEvent::Norm::weighted && !cfg.gauss_hermite_starts) {
            throw ConfigError("config: the weighted norm needs starts = {\"gauss_hermite\": n}");
          }
        }
      },
      cfg.event);
}

EventSpec event_from_json(const Json& j) {
  const auto type = get<std::string>(j, "type");
  if (type == "endpoint_at_least") return EndpointEvent{get<double>(j, "c"), j.value("particle", std::size_t{0})};
  if (type == "coalesce_by") return CoalesceEvent{get<double>(j, "t_c")};
  if (type == "hit_set_by") return HitEvent{hitting_set_from_json(get<Json>(j, "set")), get<double>(j, "t_c")};
  if (type == "ball_around_path") {
    BallEvent b;
    b.center_velocity = get<std::vector<double>>(j, "center_velocity");
    b.delta = get<double>(j, "delta");
    const auto norm = j.value("norm", std::string("sup"));
    if (norm == "sup") {
      b.norm = BallEvent::Norm::sup;
    } else if (norm == "weighted") {
      b.norm = BallEvent::Norm::weighted;
    } else {
      throw ConfigError("config: unknown norm '" + norm + "'");
    }
    return b;
  }
  throw ConfigError("config: unknown event type '" + type + "'");
}

bool hits_set(const Eigen::MatrixXd& values, const HittingSet& set, std::size_t last) {
  for (std::size_t j = 0; j <= last; ++j) {
    if (set.contains(values.col(static_cast<Eigen::Index>(j)))) return true;
  }
  return false;
}

std::size_t last_index(double t_c, std::size_t steps) {
  return std::min(steps, static_cast<std::size_t>(std::floor(t_c * static_cast<double>(steps) + 1e-9)));
}

bool in_ball(const ExperimentConfig& cfg, const BallEvent& b, const FlowPath& path) {
  const Eigen::Index n = path.values.rows();
  Eigen::MatrixXd dev(n, path.values.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = b.center_velocity.size() == 1 ? b.center_velocity[0]
                                                   : b.center_velocity[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < dev.cols(); ++j) {
      dev(i, j) = path.values(i, j) - (cfg.starts[static_cast<std::size_t>(i)] + v * path.times[static_cast<std::size_t>(j)]);
    }
  }
  if (b.norm == BallEvent::Norm::sup) return dev.cwiseAbs().maxCoeff() <= b.delta;
  return weighted_sup_norm(*cfg.weighted_norm, dev) <= b.delta;
}

// d-dimensional Brownian motion with variance eps per unit time, watched for B until
// index `last`; halfspace crossings between grid points are caught by the bridge law.
bool stopped_hits(const ExperimentConfig& cfg, const HitEvent& ev, double eps, Rng& rng) {
  const auto d = static_cast<Eigen::Index>(cfg.starts.size());
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(cfg.starts.data(), d);
  if (ev.set.contains(x)) return true;
  const double var = eps / static_cast<double>(cfg.steps);
  const double sd = std::sqrt(var);
  const bool half = ev.set.kind() == HittingSet::Kind::halfspace;
  const double nn = half ? ev.set.normal().squaredNorm() : 0.0;
  const std::size_t last = last_index(ev.t_c, cfg.steps);
  Eigen::VectorXd next(d);
  for (std::size_t j = 0; j < last; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) next[i] = x[i] + sd * rng.normal();
    if (ev.set.contains(next)) return true;
    if (half) {
      const double g0 = ev.set.offset() - ev.set.normal().dot(x);
      const double g1 = ev.set.offset() - ev.set.normal().dot(next);
      if (rng.uniform() <= std::exp(-2.0 * g0 * g1 / (nn * var))) return true;
    }
    x = next;
  }
  return false;
}

}  // namespace

ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig cfg;
  cfg.name = j.value("name", std::string("experiment"));
  const auto sim = get<std::string>(j, "simulator");
  if (sim == "smooth") {
    cfg.simulator = Simulator::smooth;
  } else if (sim == "arratia") {
    cfg.simulator = Simulator::arratia;
  } else if (sim == "stopped") {
    cfg.simulator = Simulator::stopped;
  } else {
    throw ConfigError("config: unknown simulator '" + sim + "'");
  }
  try {
    if (j.contains("kernel")) cfg.kernel = kernel_from_json(j.at("kernel"));
    const Json& starts = j.at("starts");
    if (starts.is_object()) {
      const auto n = get<std::size_t>(starts, "gauss_hermite");
      cfg.weighted_norm = gauss_hermite(n);
      cfg.starts = cfg.weighted_norm->nodes;
      cfg.gauss_hermite_starts = true;
    } else {
      cfg.starts = starts.get<std::vector<double>>();
    }
    cfg.event = event_from_json(get<Json>(j, "event"));
  } catch (const InvalidParameter& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.epsilon_list = get<std::vector<double>>(j, "epsilon_list");
  cfg.steps = j.value("steps", cfg.steps);
  cfg.replicas = j.value("replicas", cfg.replicas);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("mode")) {
    const Json& m = j.at("mode");
    if (m.is_object()) {
      cfg.mode = SimMode::frozen(get<std::size_t>(m, "frozen"));
    } else if (m == "direct") {
      cfg.mode = SimMode::direct();
    } else if (m == "time_changed") {
      cfg.mode = SimMode::time_changed();
    } else {
      throw ConfigError("config: unknown mode");
    }
  }
  const auto crossing = j.value("crossing_mode", std::string("bridge"));
  if (crossing == "bridge") {
    cfg.crossing = CrossingMode::bridge;
  } else if (crossing == "naive") {
    cfg.crossing = CrossingMode::naive;
  } else {
    throw ConfigError("config: unknown crossing_mode '" + crossing + "'");
  }
  if (j.contains("prediction")) {
    const Json& p = j.at("prediction");
    if (p.is_number()) {
      cfg.prediction = p.get<double>();
    } else if (p.is_object() && p.contains("problem")) {
      try {
        cfg.prediction_problem = problem_from_json(p.at("problem"));
      } catch (const InvalidParameter& e) {
        throw ConfigError(std::string("config: ") + e.what());
      }
    } else {
      throw ConfigError("config: prediction must be a number or {\"problem\": ...}");
    }
  }
  cfg.fit_prefactor = j.value("fit_prefactor", cfg.fit_prefactor);
  cfg.output_dir = j.value("output_dir", std::string("out"));
  if (j.contains("measure_times")) cfg.measure_times = get<std::vector<double>>(j, "measure_times");
  cfg.config_hash = fnv1a64(j.dump());
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& file) { return config_from_json(read_json(file)); }

std::optional<double> predicted_rate(const ExperimentConfig& cfg) {
  if (cfg.prediction) return cfg.prediction;
  if (cfg.prediction_problem) return minimize_rate(*cfg.prediction_problem).value;
  return std::nullopt;
}

bool replica_hits(const ExperimentConfig& cfg, double epsilon, Rng& rng) {
  if (cfg.simulator == Simulator::stopped) {
    return stopped_hits(cfg, std::get<HitEvent>(cfg.event), epsilon, rng);
  }
  FlowPath path;
  CoalescenceRecord record;
  if (cfg.simulator == Simulator::smooth) {
    path = simulate_npoint_smooth(*cfg.kernel, cfg.starts, epsilon, cfg.steps, cfg.mode, rng).path;
  } else {
    auto sim = simulate_arratia(cfg.starts, cfg.steps, cfg.crossing, rng, epsilon);
    path = std::move(sim.path);
    record = std::move(sim.record);
  }
  return std::visit(
      [&](const auto& ev) -> bool {
        using E = std::decay_t<decltype(ev)>;
        if constexpr (std::is_same_v<E, EndpointEvent>) {
          return path.values(static_cast<Eigen::Index>(ev.particle), path.values.cols() - 1) >= ev.c;
        } else if constexpr (std::is_same_v<E, CoalesceEvent>) {
          return record.clusters(ev.t_c) == 1;
        } else if constexpr (std::is_same_v<E, HitEvent>) {
          return hits_set(path.values, ev.set, last_index(ev.t_c, cfg.steps));
        } else {
          return in_ball(cfg, ev, path);
        }
      },
      cfg.event);
}

std::vector<SweepRow> mc_rare_event(const ExperimentConfig& cfg, std::size_t workers) {
  const auto prediction = predicted_rate(cfg);
  std::vector<SweepRow> rows;
  for (std::size_t e = 0; e < cfg.epsilon_list.size(); ++e) {
    const double eps = cfg.epsilon_list[e];
    const std::uint64_t eps_seed = stream_seed(cfg.seed, e);
    std::vector<std::size_t> block_hits(block_count(cfg.replicas, kReplicaBlock), 0);
    parallel_blocks(cfg.replicas, kReplicaBlock, workers,
                    [&](std::size_t begin, std::size_t end, std::size_t block) {
                      std::size_t h = 0;
                      for (std::size_t r = begin; r < end; ++r) {
                        Rng rng(eps_seed, r);
                        h += replica_hits(cfg, eps, rng) ? 1 : 0;
                      }
                      block_hits[block] = h;
                    });
    std::size_t hits = 0;
    for (std::size_t h : block_hits) hits += h;
    SweepRow row;
    row.epsilon = eps;
    row.hits = hits;
    row.replicas = cfg.replicas;
    row.p_hat = static_cast<double>(hits) / static_cast<double>(cfg.replicas);
    row.std_error = wilson_interval(hits, cfg.replicas).half_width;
    row.eps_log_p = hits == 0 ? -std::numeric_limits<double>::infinity() : eps * std::log(row.p_hat);
    row.predicted_rate = prediction.value_or(std::numeric_limits<double>::quiet_NaN());
    rows.push_back(row);
  }
  return rows;
}

LdpReport ldp_report(const std::vector<SweepRow>& rows, std::optional<double> prediction, double prefactor) {
  double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t used = 0;
  for (const SweepRow& r : rows) {
    if (r.hits == 0 || !(r.p_hat > 0.0) || !(r.std_error > 0.0)) continue;
    const double sd = r.epsilon * r.std_error / r.p_hat;
    const double w = 1.0 / (sd * sd);
    const double x = r.epsilon;
    const double y = r.epsilon * std::log(r.p_hat) - prefactor * r.epsilon * std::log(r.epsilon);
    sw += w;
    sx += w * x;
    sy += w * y;
    sxx += w * x * x;
    sxy += w * x * y;
    ++used;
  }
  if (used < 3) {
    throw InvalidParameter("ldp_report: " + std::to_string(used) +
                           " usable rows (nonzero hits); at least 3 are needed - increase replicas");
  }
  const double det = sw * sxx - sx * sx;
  if (!(std::abs(det) > 0.0)) throw InvalidParameter("ldp_report: rows need distinct epsilon values");
  const double slope = (sw * sxy - sx * sy) / det;
  const double intercept = (sy - slope * sx) / sw;
  LdpReport rep{-intercept, slope, prefactor, prediction, std::nullopt, used};
  if (prediction && *prediction != 0.0) rep.relative_gap = std::abs(rep.extrapolated_rate - *prediction) / std::abs(*prediction);
  return rep;
}

Json to_json(const LdpReport& r) {
  Json j;
  j["extrapolated_rate"] = r.extrapolated_rate;
  j["slope"] = r.slope;
  j["fit_prefactor"] = r.prefactor;
  j["rows_used"] = r.rows_used;
  j["prediction"] = r.prediction ? Json(*r.prediction) : Json(nullptr);
  j["relative_gap"] = r.relative_gap ? Json(*r.relative_gap) : Json(nullptr);
  return j;
}

void write_sweep_csv(const std::filesystem::path& file, const std::vector<SweepRow>& rows) {
  CsvWriter w(file, {"epsilon", "hits", "replicas", "p_hat", "stderr", "eps_log_p", "predicted_rate"});
  for (const SweepRow& r : rows) {
    w.row({r.epsilon, static_cast<double>(r.hits), static_cast<double>(r.replicas), r.p_hat, r.std_error,
           r.eps_log_p, r.predicted_rate});
  }
}

Json manifest(const ExperimentConfig& cfg) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(cfg.config_hash));
  Json j;
  j["name"] = cfg.name;
  j["config_hash"] = hash;
  j["seed"] = cfg.seed;
  j["version"] = FLOWLDP_VERSION;
  return j;
}

void write_smooth_paths(const ExperimentConfig& cfg, double epsilon, std::size_t replicas,
                        const std::filesystem::path& file) {
  if (!cfg.kernel) throw ConfigError("config: smooth simulation needs a kernel");
  CsvWriter w(file, {"replica", "particle", "t", "x"});
  const std::uint64_t seed = stream_seed(cfg.seed, 0);
  for (std::size_t r = 0; r < replicas; ++r) {
    Rng rng(seed, r);
    const auto sim = simulate_npoint_smooth(*cfg.kernel, cfg.starts, epsilon, cfg.steps, cfg.mode, rng);
    for (std::size_t i = 0; i < sim.path.particles(); ++i) {
      for (std::size_t j = 0; j <= sim.path.steps(); ++j) {
        w.row({static_cast<double>(r), static_cast<double>(i), sim.path.times[j],
               sim.path.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
      }
    }
  }
}

std::optional<std::size_t> dyadic_level(const std::vector<double>& starts) {
  const std::size_t n = starts.size();
  if (n < 2) return std::nullopt;
  const std::size_t m = n - 1;
  if ((m & (m - 1)) != 0) return std::nullopt;
  for (std::size_t k = 0; k < n; ++k) {
    if (std::abs(starts[k] - static_cast<double>(k) / static_cast<double>(m)) > 1e-12) return std::nullopt;
  }
  std::size_t level = 0;
  while ((std::size_t{1} << level) < m) ++level;
  return level;
}

std::vector<double> gamma_levels(const CoalescenceRecord& record, std::size_t level) {
  std::vector<double> out;
  for (std::size_t l = 0; l <= level; ++l) {
    const std::size_t stride = std::size_t{1} << (level - l);
    std::vector<double> part;
    for (std::size_t k = 0; k < record.particles(); k += stride) part.push_back(record.starts[k]);
    out.push_back(total_free_time(record, part));
  }
  return out;
}

ArratiaOutputs write_arratia_outputs(const ExperimentConfig& cfg, double epsilon, std::size_t replicas,
                                     bool with_paths) {
  ArratiaOutputs out;
  out.merges = cfg.output_dir / "merges.csv";
  out.measures = cfg.output_dir / "measures.csv";
  const auto level = dyadic_level(cfg.starts);
  if (level) out.gamma = cfg.output_dir / "gamma.csv";
  if (with_paths) out.paths = cfg.output_dir / "paths.csv";

  CsvWriter merges(out.merges, {"replica", "time", "left", "right"});
  CsvWriter measures(out.measures, {"replica", "t", "position", "mass"});
  std::optional<CsvWriter> gamma;
  if (level) gamma.emplace(out.gamma, std::vector<std::string>{"replica", "level", "sum_tau"});
  std::optional<CsvWriter> paths;
  if (with_paths) paths.emplace(out.paths, std::vector<std::string>{"replica", "particle", "t", "x"});

  const std::uint64_t seed = stream_seed(cfg.seed, 0);
  for (std::size_t r = 0; r < replicas; ++r) {
    Rng rng(seed, r);
    const auto sim = simulate_arratia(cfg.starts, cfg.steps, cfg.crossing, rng, epsilon);
    const auto rd = static_cast<double>(r);
    for (const MergeEvent& m : sim.record.merges) {
      merges.row({rd, m.time, static_cast<double>(m.left), static_cast<double>(m.right)});
    }
    for (double t : cfg.measure_times) {
      const DiscreteMeasure mu = empirical_measure(sim.path, sim.record, t);
      for (const Atom& a : mu.atoms()) {
        measures.row({rd, t, a.position, a.mass});
      }
    }
    if (gamma) {
      const auto g = gamma_levels(sim.record, *level);
      for (std::size_t l = 0; l < g.size(); ++l) gamma->row({rd, static_cast<double>(l), g[l]});
    }
    if (paths) {
      for (std::size_t i = 0; i < sim.path.particles(); ++i) {
        for (std::size_t j = 0; j <= sim.path.steps(); ++j) {
          paths->row({rd, static_cast<double>(i), sim.path.times[j],
                      sim.path.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
        }
      }
    }
  }
  return out;
}

}  // namespace flowldp
