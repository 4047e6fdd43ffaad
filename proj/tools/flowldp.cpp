// flowldp command-line entry point.
#include <CLI11.hpp>

#include <algorithm>
#include <iostream>

#include "flowldp/arratia.hpp"
#include "flowldp/error.hpp"
#include "flowldp/io.hpp"
#include "flowldp/ldp_lab.hpp"
#include "flowldp/metrics.hpp"
#include "flowldp/parallel.hpp"
#include "flowldp/rates.hpp"
#include "flowldp/varmin.hpp"

using namespace flowldp;
namespace fs = std::filesystem;

namespace {

Json rate_json(const RateValue& r) {
  Json j;
  j["value"] = r.is_finite() ? Json(r.value()) : Json(nullptr);
  j["reason"] = r.reason() ? Json(std::string(to_string(*r.reason()))) : Json(nullptr);
  return j;
}

// Long table (key1, key2, value) -> matrix indexed by the sorted distinct keys.
struct Pivot {
  std::vector<double> rows;
  std::vector<double> cols;
  Eigen::MatrixXd values;
};

Pivot pivot(const Table& t, const std::string& row_key, const std::string& col_key, const std::string& value_key) {
  const auto rk = t.values(row_key);
  const auto ck = t.values(col_key);
  const auto v = t.values(value_key);
  Pivot p;
  p.rows = rk;
  p.cols = ck;
  for (auto* keys : {&p.rows, &p.cols}) {
    std::sort(keys->begin(), keys->end());
    keys->erase(std::unique(keys->begin(), keys->end()), keys->end());
  }
  if (p.rows.size() * p.cols.size() != v.size()) throw ConfigError("input: expected one value per (" + row_key + ", " + col_key + ") pair");
  p.values.resize(static_cast<Eigen::Index>(p.rows.size()), static_cast<Eigen::Index>(p.cols.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto r = std::lower_bound(p.rows.begin(), p.rows.end(), rk[i]) - p.rows.begin();
    const auto c = std::lower_bound(p.cols.begin(), p.cols.end(), ck[i]) - p.cols.begin();
    p.values(r, c) = v[i];
  }
  return p;
}

// Wide table: column "t" plus one column per coordinate, in file order.
PiecewiseLinearPath wide_path(const Table& t) {
  const std::size_t tc = t.column("t");
  std::vector<double> times;
  const std::size_t d = t.header.size() - 1;
  Eigen::MatrixXd v(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(t.rows.size()));
  for (std::size_t j = 0; j < t.rows.size(); ++j) {
    times.push_back(t.rows[j][tc]);
    std::size_t r = 0;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      if (c == tc) continue;
      v(static_cast<Eigen::Index>(r++), static_cast<Eigen::Index>(j)) = t.rows[j][c];
    }
  }
  return PiecewiseLinearPath(std::move(times), std::move(v));
}

Json rate_eval(const std::string& functional, const fs::path& input, const Json& cfg) {
  const Table t = read_csv(input);
  auto kernel = [&] { return kernel_from_json(cfg.at("kernel")); };
  if (functional == "gaussian") {
    const Pivot p = pivot(t, "u", "t", "h");
    return rate_json(rate_gaussian_field(kernel(), SpatialField{p.rows, p.cols, p.values}));
  }
  if (functional == "fixed-time") {
    return rate_json(rate_fixed_time(kernel(), t.values("u"), t.values("g"), cfg.at("t").get<double>()));
  }
  if (functional == "flow") {
    const Pivot p = pivot(t, "u", "t", "x");
    FlowPath h;
    h.starts = p.rows;
    h.times = p.cols;
    h.values = p.values;
    return rate_json(rate_flow(kernel(), h));
  }
  const PiecewiseLinearPath path = wide_path(t);
  if (functional == "stopped") {
    const auto start = cfg.at("start").get<std::vector<double>>();
    return rate_json(rate_stopped(path, hitting_set_from_json(cfg.at("set")),
                                  Eigen::Map<const Eigen::VectorXd>(start.data(), static_cast<Eigen::Index>(start.size()))));
  }
  std::vector<double> starts;
  if (cfg.contains("starts")) {
    starts = cfg.at("starts").get<std::vector<double>>();
  } else {
    for (std::size_t k = 0; k < path.dimension(); ++k) starts.push_back(path.value(k, 0));
  }
  if (functional == "npoint") return rate_json(rate_npoint(path, starts));
  if (functional == "dyadic") {
    ForestSkeleton s;
    const std::size_t m = path.dimension() - 1;
    while ((std::size_t{1} << s.level) < m) ++s.level;
    if ((std::size_t{1} << s.level) != m) throw ConfigError("dyadic input needs 2^L + 1 path columns");
    s.times = path.times();
    s.values = path.values();
    const auto res = rate_dyadic(s, cfg.value("n_max", s.level));
    Json j = rate_json(res.sup);
    j["levels"] = Json::array();
    for (const auto& r : res.levels) j["levels"].push_back(rate_json(r));
    j["nondecreasing"] = res.nondecreasing;
    return j;
  }
  throw ConfigError("unknown functional '" + functional + "'");
}

DiscreteMeasure measure_csv(const fs::path& file) {
  const Table t = read_csv(file);
  return DiscreteMeasure::from_points(t.values("position"), t.values("mass"));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flowldp: large deviations lab for stochastic flows"};
  app.require_subcommand(1);

  std::string config, input, functional = "npoint", problem, a_file, b_file, out_dir = ".";
  double epsilon = 0.0, tol = 1e-6;
  std::size_t replicas = 1, workers = default_workers(), records = 100;
  bool with_paths = false;

  auto* smooth = app.add_subcommand("simulate-smooth", "sample smooth-flow n-point paths to CSV");
  smooth->add_option("--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  smooth->add_option("--epsilon", epsilon, "noise intensity (default: first of epsilon_list)");
  smooth->add_option("--replicas", replicas, "number of sample paths")->capture_default_str();

  auto* arratia = app.add_subcommand("simulate-arratia", "simulate coalescing flows; merges, measures, gamma CSVs");
  arratia->add_option("--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  arratia->add_option("--epsilon", epsilon, "time scale (default: first of epsilon_list)");
  arratia->add_option("--replicas", replicas, "number of records")->capture_default_str();
  arratia->add_flag("--paths", with_paths, "also write the (large) paths CSV");

  auto* rate = app.add_subcommand("rate-eval", "evaluate a rate functional on sampled input");
  rate->add_option("--functional", functional, "gaussian|fixed-time|flow|stopped|npoint|dyadic")
      ->check(CLI::IsMember({"gaussian", "fixed-time", "flow", "stopped", "npoint", "dyadic"}))->capture_default_str();
  rate->add_option("--input", input, "input CSV")->required()->check(CLI::ExistingFile);
  rate->add_option("--config", config, "JSON with kernel / t / set / start / starts / n_max")->check(CLI::ExistingFile);

  auto* varmin = app.add_subcommand("var-min", "minimize a discretized rate functional");
  varmin->add_option("--problem", problem, "variational problem (JSON)")->required()->check(CLI::ExistingFile);
  varmin->add_option("--output-dir", out_dir, "where the optimal path CSV goes")->capture_default_str();

  auto* sweep = app.add_subcommand("ldp-sweep", "Monte Carlo epsilon sweep and LDP slope report");
  sweep->add_option("--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--workers", workers, "worker threads (default FLOWLDP_THREADS or all cores)");

  auto* lp = app.add_subcommand("lp-distance", "Levy-Prokhorov distance of two measure CSVs (position,mass)");
  lp->add_option("--a", a_file, "first measure")->required()->check(CLI::ExistingFile);
  lp->add_option("--b", b_file, "second measure")->required()->check(CLI::ExistingFile);
  lp->add_option("--tol", tol, "bisection tolerance")->capture_default_str();

  auto* gamma = app.add_subcommand("gamma-estimate", "total free time along dyadic refinements");
  gamma->add_option("--config", config, "arratia config with starts k/2^L")->required()->check(CLI::ExistingFile);
  gamma->add_option("--epsilon", epsilon, "time scale (default: first of epsilon_list)");
  gamma->add_option("--records", records, "number of simulated records")->capture_default_str();
  gamma->add_option("--workers", workers, "worker threads");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*smooth || *arratia || *sweep || *gamma) {
      const ExperimentConfig cfg = load_config(config);
      const double eps = epsilon > 0.0 ? epsilon : cfg.epsilon_list.front();
      if (*smooth) {
        const fs::path file = cfg.output_dir / "paths.csv";
        write_smooth_paths(cfg, eps, replicas, file);
        write_json(cfg.output_dir / "manifest.json", manifest(cfg));
        std::cout << file.string() << '\n';
      } else if (*arratia) {
        const auto out = write_arratia_outputs(cfg, eps, replicas, with_paths);
        write_json(cfg.output_dir / "manifest.json", manifest(cfg));
        for (const auto& f : {out.merges, out.measures, out.gamma, out.paths}) {
          if (!f.empty()) std::cout << f.string() << '\n';
        }
      } else if (*sweep) {
        const auto rows = mc_rare_event(cfg, workers);
        write_sweep_csv(cfg.output_dir / "sweep.csv", rows);
        write_json(cfg.output_dir / "manifest.json", manifest(cfg));
        Json report;
        int status = 0;
        try {
          report = to_json(ldp_report(rows, predicted_rate(cfg), cfg.fit_prefactor));
        } catch (const InvalidParameter& e) {
          report["error"] = e.what();
          status = 1;
        }
        write_json(cfg.output_dir / "report.json", report);
        std::cout << report.dump(2) << '\n';
        return status;
      } else {
        const auto level = dyadic_level(cfg.starts);
        if (!level) throw ConfigError("gamma-estimate: starts must be k/2^L, k = 0..2^L");
        std::vector<std::vector<double>> sums(records);
        const std::uint64_t seed = stream_seed(cfg.seed, 0);
        parallel_blocks(records, 16, workers, [&](std::size_t b, std::size_t e, std::size_t) {
          for (std::size_t r = b; r < e; ++r) {
            Rng rng(seed, r);
            sums[r] = gamma_levels(simulate_arratia(cfg.starts, cfg.steps, cfg.crossing, rng, eps).record, *level);
          }
        });
        CsvWriter w(cfg.output_dir / "gamma_estimate.csv", {"record", "level", "sum_tau"});
        std::vector<double> mean(*level + 1, 0.0);
        std::size_t violations = 0;
        for (std::size_t r = 0; r < records; ++r) {
          for (std::size_t l = 0; l <= *level; ++l) {
            w.row({static_cast<double>(r), static_cast<double>(l), sums[r][l]});
            mean[l] += sums[r][l] / static_cast<double>(records);
            if (l > 0 && sums[r][l] < sums[r][l - 1]) ++violations;
          }
        }
        write_json(cfg.output_dir / "manifest.json", manifest(cfg));
        Json j;
        j["records"] = records;
        j["mean_by_level"] = mean;
        j["monotonicity_violations"] = violations;
        std::cout << j.dump(2) << '\n';
      }
    } else if (*rate) {
      const Json cfg = config.empty() ? Json::object() : read_json(config);
      std::cout << rate_eval(functional, input, cfg).dump() << '\n';
    } else if (*varmin) {
      const Json pj = read_json(problem);
      const VariationalSolution s = minimize_rate(problem_from_json(pj), tolerances_from_json(pj.value("tolerances", Json())));
      const fs::path file = fs::path(out_dir) / "varmin_path.csv";
      std::vector<std::string> header{"t"};
      for (std::size_t k = 0; k < s.path.dimension(); ++k) header.push_back("x" + std::to_string(k));
      CsvWriter w(file, header);
      for (std::size_t j = 0; j < s.path.points(); ++j) {
        std::vector<std::string> cells{format_double(s.path.times()[j])};
        for (std::size_t k = 0; k < s.path.dimension(); ++k) cells.push_back(format_double(s.path.value(k, j)));
        w.row(cells);
      }
      Json j;
      j["value"] = s.value;
      j["path_csv"] = file.string();
      j["grad_check"] = s.grad_check;
      j["gradient_norm"] = s.gradient_norm;
      j["converged"] = s.converged;
      j["event_times"] = s.event_times;
      std::cout << j.dump(2) << '\n';
    } else if (*lp) {
      std::cout << format_double(prokhorov(measure_csv(a_file), measure_csv(b_file), tol)) << '\n';
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
