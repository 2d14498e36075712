#include "harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "errors.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace episim {

std::vector<ObservableSpec> standard_observables() {
  return {
      {"one", [](double) { return 1.0; }},
      {"cos", [](double theta) { return std::cos(2.0 * std::numbers::pi * theta); }},
      {"sin", [](double theta) { return std::sin(2.0 * std::numbers::pi * theta); }},
  };
}

ConvergenceReport convergence_experiment(const ConvergenceSettings& settings) {
  settings.params.validate();
  require(settings.replicas >= 30, ErrorCode::InvalidArgument,
          "convergence error bars need >= 30 replicas");
  require(!settings.torus_sizes.empty() && !settings.times.empty() &&
              !settings.observables.empty(),
          ErrorCode::InvalidArgument, "empty convergence settings");

  // PDE targets at the experiment times, plus a refined-grid recomputation.
  PdeConfig pde_config;
  PdeReport pde = pde_solve_fn(settings.m1, settings.m2, settings.pde_grid,
                               settings.params,
                               settings.times.back(), pde_config,
                               settings.times);
  PdeReport pde_fine = pde_solve_fn(settings.m1, settings.m2,
                                    2 * settings.pde_grid, settings.params,
                                    settings.times.back(), pde_config,
                                    settings.times);

  ConvergenceReport report;
  for (std::int32_t n : settings.torus_sizes) {
    const std::size_t sites = static_cast<std::size_t>(n);
    Profile p1 = Profile::from_function(sites, settings.m1);
    Profile p2 = Profile::from_function(sites, settings.m2);
    std::vector<Observable> grids;
    for (const auto& spec : settings.observables) {
      grids.push_back(Observable::from_function(spec.id, sites, spec.g));
    }

    // pairings[replica][time][observable] -> (eta, xi)
    std::vector<std::vector<std::vector<PairingValue>>> pairings(
        settings.replicas);
    std::vector<std::uint8_t> truncated(settings.replicas, 0);
    TwoSpeciesParams params;
    params.rates = settings.params;
    params.N = n;

    parallel_for(settings.replicas, settings.jobs, [&](std::size_t rep) {
      TsSimOptions options;
      options.horizon = settings.times.back();
      options.seed = derive_seed(settings.master_seed,
                                 static_cast<std::uint64_t>(n), rep + 1);
      options.event_budget = settings.event_budget;
      options.snapshot_times = settings.times;
      TwoSpeciesConfig config0 =
          TwoSpeciesConfig::poisson_init(p1, p2, derive_seed(options.seed, 0x696e6974));
      TsTrajectory trajectory = simulate_torus(config0, params, options);
      truncated[rep] = trajectory.truncated ? 1 : 0;
      if (trajectory.truncated) return;
      pairings[rep].resize(settings.times.size());
      for (std::size_t ti = 0; ti < settings.times.size(); ++ti) {
        for (const Observable& g : grids) {
          pairings[rep][ti].push_back(
              empirical_pairing(trajectory.snapshots[ti].config, g));
        }
      }
    });
    for (std::uint8_t flag : truncated) {
      require(!flag, ErrorCode::BudgetExceeded,
              "two-species replica exceeded the event budget");
    }

    for (std::size_t ti = 0; ti < settings.times.size(); ++ti) {
      const PdeState& state = pde.outputs[ti];
      const PdeState& state_fine = pde_fine.outputs[ti];
      for (std::size_t oi = 0; oi < settings.observables.size(); ++oi) {
        std::vector<double> g_pde(settings.pde_grid);
        std::vector<double> g_fine(2 * settings.pde_grid);
        for (std::size_t i = 0; i < g_pde.size(); ++i) {
          g_pde[i] = settings.observables[oi].g(
              static_cast<double>(i) / static_cast<double>(g_pde.size()));
        }
        for (std::size_t i = 0; i < g_fine.size(); ++i) {
          g_fine[i] = settings.observables[oi].g(
              static_cast<double>(i) / static_cast<double>(g_fine.size()));
        }
        for (int species = 0; species < 2; ++species) {
          std::vector<double> values;
          values.reserve(settings.replicas);
          for (std::size_t rep = 0; rep < settings.replicas; ++rep) {
            const PairingValue& pv = pairings[rep][ti][oi];
            values.push_back(species == 0 ? pv.eta : pv.xi);
          }
          MeanStderr ms = mean_stderr(values);
          ConvergenceCell cell;
          cell.N = n;
          cell.time = settings.times[ti];
          cell.observable = settings.observables[oi].id;
          cell.species = species;
          cell.replicas = settings.replicas;
          cell.mean = ms.mean;
          cell.target = torus_integral(
              g_pde, species == 0 ? state.lambda1 : state.lambda2);
          double target_fine = torus_integral(
              g_fine, species == 0 ? state_fine.lambda1 : state_fine.lambda2);
          cell.abs_error = std::fabs(ms.mean - cell.target);
          cell.stderr_ = ms.stderr_;
          report.refined_target_shift =
              std::max(report.refined_target_shift,
                       std::fabs(cell.target - target_fine));
          report.cells.push_back(cell);
        }
      }
    }
  }

  report.min_stderr = 0.0;
  for (const auto& cell : report.cells) {
    if (cell.stderr_ > 0.0 &&
        (report.min_stderr == 0.0 || cell.stderr_ < report.min_stderr)) {
      report.min_stderr = cell.stderr_;
    }
  }
  return report;
}

void write_convergence_csv(const std::filesystem::path& path,
                           const ConvergenceReport& report) {
  CsvWriter csv(path, {"N", "time", "observable", "species", "replicas",
                       "mean", "target", "abs_error", "stderr"});
  for (const auto& c : report.cells) {
    csv.row({cell(c.N), cell(c.time), c.observable,
             c.species == 0 ? "eta" : "xi", cell(c.replicas), cell(c.mean),
             cell(c.target), cell(c.abs_error), cell(c.stderr_)});
  }
}

WindowReport window_experiment(const WindowSettings& settings) {
  settings.params.validate();
  require(!settings.c_ladder.empty(), ErrorCode::InvalidArgument,
          "empty C ladder");
  require(std::is_sorted(settings.c_ladder.begin(), settings.c_ladder.end()) &&
              std::adjacent_find(settings.c_ladder.begin(),
                                 settings.c_ladder.end()) ==
                  settings.c_ladder.end(),
          ErrorCode::InvalidArgument, "C ladder must be strictly increasing");
  require(settings.A >= 1 && settings.A < settings.c_ladder.front(),
          ErrorCode::InvalidArgument, "need 1 <= A < min(C)");
  require(settings.N >= 2 && settings.replicas >= 1,
          ErrorCode::InvalidArgument, "need N >= 2 and replicas >= 1");

  const std::int32_t c_ref = settings.c_ladder.back();
  const std::int64_t window = static_cast<std::int64_t>(settings.A) * settings.N;
  const std::size_t window_sites = static_cast<std::size_t>(2 * window + 1);

  TwoSpeciesParams params;
  params.rates = settings.params;
  params.N = settings.N;

  // accum[c][replica] -> (sum |d eta|, sum |d xi|) over the window
  std::vector<std::vector<std::pair<double, double>>> accum(
      settings.c_ladder.size(),
      std::vector<std::pair<double, double>>(settings.replicas, {0.0, 0.0}));

  parallel_for(settings.replicas, settings.jobs, [&](std::size_t rep) {
    SiteStreamSimulator reference(static_cast<std::int64_t>(c_ref) * settings.N,
                                  params, settings.m1, settings.m2,
                                  settings.master_seed, rep + 1);
    reference.run_to(settings.horizon);
    for (std::size_t ci = 0; ci < settings.c_ladder.size(); ++ci) {
      const std::int32_t c = settings.c_ladder[ci];
      if (c == c_ref) continue;  // identical construction, discrepancy 0
      SiteStreamSimulator run(static_cast<std::int64_t>(c) * settings.N, params,
                              settings.m1, settings.m2, settings.master_seed,
                              rep + 1);
      run.run_to(settings.horizon);
      double sum_eta = 0.0, sum_xi = 0.0;
      for (std::int64_t x = -window; x <= window; ++x) {
        sum_eta += std::fabs(static_cast<double>(run.eta_at(x) -
                                                 reference.eta_at(x)));
        sum_xi += std::fabs(static_cast<double>(run.xi_at(x) -
                                                reference.xi_at(x)));
      }
      accum[ci][rep] = {sum_eta, sum_xi};
    }
  });

  WindowReport report;
  report.reference_c = c_ref;
  for (std::size_t ci = 0; ci < settings.c_ladder.size(); ++ci) {
    WindowCell cell;
    cell.C = settings.c_ladder[ci];
    cell.torus_sites = 2 * static_cast<std::int64_t>(cell.C) * settings.N + 1;
    double eta = 0.0, xi = 0.0;
    for (const auto& [se, sx] : accum[ci]) {
      eta += se;
      xi += sx;
    }
    const double denom =
        static_cast<double>(settings.replicas) * static_cast<double>(window_sites);
    cell.mean_discrepancy_eta = eta / denom;
    cell.mean_discrepancy_xi = xi / denom;
    cell.mean_discrepancy = cell.mean_discrepancy_eta + cell.mean_discrepancy_xi;
    report.cells.push_back(cell);
  }
  return report;
}

void write_window_csv(const std::filesystem::path& path,
                      const WindowSettings& settings,
                      const WindowReport& report) {
  CsvWriter csv(path, {"C", "torus_sites", "N", "A", "horizon", "replicas",
                       "mean_disc_eta", "mean_disc_xi", "mean_disc_total",
                       "reference_C"});
  for (const auto& c : report.cells) {
    csv.row({cell(c.C), cell(c.torus_sites), cell(settings.N), cell(settings.A),
             cell(settings.horizon), cell(settings.replicas),
             cell(c.mean_discrepancy_eta), cell(c.mean_discrepancy_xi),
             cell(c.mean_discrepancy), cell(report.reference_c)});
  }
}

std::vector<PhaseScanCell> phase_scan(const PhaseScanSettings& settings) {
  settings.base.validate();
  require(!settings.lambdas.empty() && !settings.phis.empty(),
          ErrorCode::InvalidArgument, "phase scan grids must be nonempty");
  std::vector<PhaseScanCell> cells;
  for (double lambda : settings.lambdas) {
    for (double phi : settings.phis) {
      ModelParams params = settings.base;
      params.lambda = lambda;
      params.phi = phi;
      // Seed from the parameter values, so the scan result is independent of
      // grid-point evaluation order.
      std::uint64_t lam_bits, phi_bits;
      static_assert(sizeof(double) == sizeof(std::uint64_t));
      std::memcpy(&lam_bits, &lambda, sizeof lam_bits);
      std::memcpy(&phi_bits, &phi, sizeof phi_bits);
      std::uint64_t seed = derive_seed(settings.master_seed, lam_bits, phi_bits);
      PhaseScanCell cell;
      cell.lambda = lambda;
      cell.phi = phi;
      cell.estimate = survival_probability(params,
                                           ClusterConfig::single_seed(params.d),
                                           settings.horizon, settings.replicas,
                                           seed, settings.run);
      const double two_d = 2.0 * params.d;
      cell.theory_extinct =
          params.infinite_cap()
              ? (phi + two_d * lambda < 1.0)
              : (phi + two_d * std::max(lambda, params.beta) < 1.0);
      cells.push_back(cell);
    }
  }
  return cells;
}

void write_phase_csv(const std::filesystem::path& path,
                     const PhaseScanSettings& settings,
                     const std::vector<PhaseScanCell>& cells) {
  CsvWriter csv(path, {"lambda", "phi", "beta", "kappa", "recovery", "p_hat",
                       "ci", "replicas", "horizon", "theory_extinct"});
  for (const auto& c : cells) {
    csv.row({cell(c.lambda), cell(c.phi), cell(settings.base.beta),
             settings.base.infinite_cap()
                 ? std::string("inf")
                 : std::to_string(settings.base.kappa_cap),
             settings.base.recovery == RecoveryMode::Individual ? "individual"
                                                                : "cluster",
             cell(c.estimate.p_hat), cell(c.estimate.ci_halfwidth),
             cell(c.estimate.replicas), cell(settings.horizon),
             cell(static_cast<int>(c.theory_extinct))});
  }
}

void write_survival_csv(const std::filesystem::path& path, double phi,
                        const SurvivalEstimate& estimate) {
  CsvWriter csv(path, {"phi", "p_hat", "ci", "replicas", "horizon", "seed"});
  csv.row({cell(phi), cell(estimate.p_hat), cell(estimate.ci_halfwidth),
           cell(estimate.replicas), cell(estimate.horizon),
           cell(estimate.master_seed)});
}

void write_probes_csv(const std::filesystem::path& path,
                      const PhiSearchResult& result) {
  CsvWriter csv(path, {"phi", "p_hat", "ci", "replicas", "horizon", "seed"});
  for (const auto& probe : result.probes) {
    csv.row({cell(probe.phi), cell(probe.estimate.p_hat),
             cell(probe.estimate.ci_halfwidth), cell(probe.estimate.replicas),
             cell(probe.estimate.horizon), cell(probe.estimate.master_seed)});
  }
}

void write_trajectory_jsonl(const std::filesystem::path& path,
                            const Trajectory& trajectory, int d) {
  std::string buffer;
  for (const auto& snap : trajectory.snapshots) {
    nlohmann::json line;
    line["t"] = snap.t;
    nlohmann::json sites = nlohmann::json::array();
    for (const auto& [coord, count] : snap.sites) {
      nlohmann::json entry = nlohmann::json::array();
      nlohmann::json position = nlohmann::json::array();
      for (int k = 0; k < d; ++k) position.push_back(coord[k]);
      entry.push_back(position);
      entry.push_back(count);
      sites.push_back(entry);
    }
    line["sites"] = sites;
    buffer += line.dump();
    buffer += '\n';
  }
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::Io, "cannot open " + path.string());
  out << buffer;
}

void write_couple_report_json(const std::filesystem::path& path,
                              const CoupledTrajectory& trajectory,
                              const OrderingCheckResult& check,
                              std::uint64_t replicas,
                              std::uint64_t total_violations,
                              std::uint64_t total_events) {
  nlohmann::json report;
  report["replicas"] = replicas;
  report["events_checked"] = total_events;
  report["violations"] = total_violations;
  report["last_replica"] = {
      {"rings", trajectory.rings},
      {"recorded_events", trajectory.events.size()},
      {"truncated", trajectory.truncated},
      {"final_time", trajectory.final_time},
      {"ok", check.ok},
  };
  write_json_file(path, report);
}

void write_coupled_events_jsonl(const std::filesystem::path& path,
                                const CoupledTrajectory& trajectory, int d) {
  std::string buffer;
  for (const auto& event : trajectory.events) {
    nlohmann::json line;
    line["t"] = event.t;
    nlohmann::json position = nlohmann::json::array();
    for (int k = 0; k < d; ++k) position.push_back(event.site[k]);
    line["site"] = position;
    line["a"] = event.a_after;
    line["b"] = event.b_after;
    buffer += line.dump();
    buffer += '\n';
  }
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::Io, "cannot open " + path.string());
  out << buffer;
}

void write_tilde_table_csv(const std::filesystem::path& path,
                           const TildeParams& params,
                           const std::vector<double>& grid,
                           std::uint64_t mc_samples, std::uint64_t seed) {
  CsvWriter csv(path, {"a", "b", "beta1_tilde", "delta1_tilde", "beta2_tilde",
                       "delta2_tilde", "g_tilde", "beta1_mc", "delta1_mc",
                       "beta2_mc", "delta2_mc", "g_mc", "beta1_se", "delta1_se",
                       "beta2_se", "delta2_se", "g_se"});
  std::uint64_t point = 0;
  for (double a : grid) {
    for (double b : grid) {
      TildeRates closed = tilde_rates(a, b, params);
      TildeMcTable mc = tilde_rates_mc(a, b, params, mc_samples,
                                       derive_seed(seed, ++point, 0x74696c64));
      csv.row({cell(a), cell(b), cell(closed.beta1), cell(closed.delta1),
               cell(closed.beta2), cell(closed.delta2), cell(closed.g),
               cell(mc.beta1.mean), cell(mc.delta1.mean), cell(mc.beta2.mean),
               cell(mc.delta2.mean), cell(mc.g.mean), cell(mc.beta1.stderr_),
               cell(mc.delta1.stderr_), cell(mc.beta2.stderr_),
               cell(mc.delta2.stderr_), cell(mc.g.stderr_)});
    }
  }
}

void write_pde_csv(const std::filesystem::path& path, const PdeReport& report) {
  CsvWriter csv(path, {"t", "theta", "lambda1", "lambda2"});
  for (const auto& state : report.outputs) {
    for (std::size_t i = 0; i < state.grid(); ++i) {
      double theta = static_cast<double>(i) / static_cast<double>(state.grid());
      csv.row({cell(state.t), cell(theta), cell(state.lambda1[i]),
               cell(state.lambda2[i])});
    }
  }
}

void write_two_species_snapshots_csv(const std::filesystem::path& path,
                                     const TsTrajectory& trajectory) {
  CsvWriter csv(path, {"t", "x", "eta", "xi"});
  for (const auto& snap : trajectory.snapshots) {
    for (std::size_t x = 0; x < snap.config.size(); ++x) {
      csv.row({cell(snap.t), cell(static_cast<std::uint64_t>(x)),
               cell(snap.config.eta[x]), cell(snap.config.xi[x])});
    }
  }
}

void write_pairings_csv(const std::filesystem::path& path,
                        const TsTrajectory& trajectory,
                        const std::vector<ObservableSpec>& observables,
                        std::uint64_t replica) {
  CsvWriter csv(path, {"t", "observable_id", "species", "value", "replica"});
  for (const auto& snap : trajectory.snapshots) {
    for (const auto& spec : observables) {
      Observable g = Observable::from_function(spec.id, snap.config.size(), spec.g);
      PairingValue pv = empirical_pairing(snap.config, g);
      csv.row({cell(snap.t), spec.id, "eta", cell(pv.eta), cell(replica)});
      csv.row({cell(snap.t), spec.id, "xi", cell(pv.xi), cell(replica)});
    }
  }
}

}  // namespace episim
