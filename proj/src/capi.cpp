#include "episim/episim.h"

#include <chrono>
#include <cmath>
#include <cstring>
#include <numbers>
#include <string>

#include "errors.hpp"
#include "harness.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "stats.hpp"
#include "version.hpp"

namespace {

thread_local std::string g_last_error;

epi_status status_of(episim::ErrorCode code) {
  switch (code) {
    case episim::ErrorCode::BudgetExceeded:
    case episim::ErrorCode::CountOverflow:
      return EPI_E_BUDGET;
    case episim::ErrorCode::Io:
      return EPI_E_IO;
    default:
      return EPI_E_INVALID;
  }
}

template <typename Fn>
epi_status guarded(Fn&& fn) {
  try {
    fn();
    return EPI_OK;
  } catch (const episim::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return EPI_E_INTERNAL;
  }
}

episim::ModelParams to_core(const epi_model_params& p) {
  episim::ModelParams out;
  out.lambda = p.lambda;
  out.beta = p.beta;
  out.phi = p.phi;
  out.kappa_cap = p.kappa_cap <= 0 ? episim::ModelParams::kInfiniteCap
                                   : p.kappa_cap;
  out.d = p.dim;
  out.recovery = p.recovery == EPI_RECOVERY_CLUSTER
                     ? episim::RecoveryMode::Cluster
                     : episim::RecoveryMode::Individual;
  out.validate();
  return out;
}

episim::TildeParams to_core(const epi_tilde_params& p) {
  episim::TildeParams out;
  out.alpha1 = p.alpha1;
  out.alpha2 = p.alpha2;
  out.kappa_death = p.kappa_death;
  out.lambda = p.lambda;
  out.beta = p.beta;
  out.phi = p.phi;
  out.recovery_rate = p.disable_recovery ? 0.0 : 1.0;
  out.validate();
  return out;
}

episim::ClusterConfig initial_config(const int64_t* coords,
                                     const int64_t* counts, size_t n_sites,
                                     int dim) {
  if (n_sites == 0) return episim::ClusterConfig::single_seed(dim);
  episim::require(coords != nullptr && counts != nullptr,
                  episim::ErrorCode::InvalidArgument,
                  "initial configuration arrays are null");
  episim::ClusterConfig config;
  for (size_t i = 0; i < n_sites; ++i) {
    episim::Coord site = episim::make_site(0);
    for (int k = 0; k < dim; ++k) site[k] = coords[i * dim + k];
    episim::require(counts[i] >= 1, episim::ErrorCode::InvalidArgument,
                    "initial counts must be >= 1");
    config.set(site, dim, counts[i]);
  }
  return config;
}

struct RunOpts {
  double horizon = 0.0;
  uint64_t seed = 1;
  uint64_t event_budget = 100'000'000ULL;
  uint64_t cutoff = 10'000;
  int jobs = 0;
  double tau = 0.0;
};

RunOpts to_core(const epi_run_opts* opts) {
  RunOpts out;
  episim::require(opts != nullptr, episim::ErrorCode::InvalidArgument,
                  "run options are null");
  out.horizon = opts->horizon;
  out.seed = opts->seed;
  if (opts->event_budget > 0) out.event_budget = opts->event_budget;
  if (opts->survival_count_cutoff > 0) out.cutoff = opts->survival_count_cutoff;
  out.jobs = opts->jobs;
  out.tau = opts->tau_leap;
  return out;
}

std::function<double(double)> profile_fn(const epi_profile_spec& spec) {
  episim::require(spec.kind >= EPI_PROFILE_CONST && spec.kind <= EPI_PROFILE_SINE,
                  episim::ErrorCode::InvalidArgument, "unknown profile kind");
  const double level = spec.level;
  const double amplitude = spec.amplitude;
  switch (spec.kind) {
    case EPI_PROFILE_COSINE:
      return [level, amplitude](double theta) {
        return level + amplitude * std::cos(2.0 * std::numbers::pi * theta);
      };
    case EPI_PROFILE_SINE:
      return [level, amplitude](double theta) {
        return level + amplitude * std::sin(2.0 * std::numbers::pi * theta);
      };
    default:
      return [level](double) { return level; };
  }
}

nlohmann::json model_json(const epi_model_params& p) {
  return {{"lambda", p.lambda},
          {"beta", p.beta},
          {"phi", p.phi},
          {"kappa_cap", p.kappa_cap <= 0 ? nlohmann::json("inf")
                                         : nlohmann::json(p.kappa_cap)},
          {"dim", p.dim},
          {"recovery",
           p.recovery == EPI_RECOVERY_CLUSTER ? "cluster" : "individual"},
          {"outside_existence_regime",
           p.kappa_cap <= 0 && p.beta > p.lambda}};
}

nlohmann::json tilde_json(const epi_tilde_params& p) {
  return {{"alpha1", p.alpha1}, {"alpha2", p.alpha2},
          {"kappa_death", p.kappa_death}, {"lambda", p.lambda},
          {"beta", p.beta},    {"phi", p.phi},
          {"disable_recovery", p.disable_recovery != 0}};
}

nlohmann::json opts_json(const RunOpts& o) {
  return {{"horizon", o.horizon},
          {"seed", o.seed},
          {"event_budget", o.event_budget},
          {"survival_count_cutoff", o.cutoff},
          {"jobs", o.jobs}};
}

class WallClock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

}  // namespace

extern "C" {

const char* epi_version(void) { return episim::kVersion; }

const char* epi_last_error(void) { return g_last_error.c_str(); }

epi_status epi_simulate(const epi_model_params* params,
                        const int64_t* site_coords, const int64_t* counts,
                        size_t n_sites, const epi_run_opts* opts,
                        double snapshot_interval, const char* out_dir,
                        epi_sim_summary* out) {
  return guarded([&]() {
    WallClock clock;
    episim::require(params != nullptr && out != nullptr,
                    episim::ErrorCode::InvalidArgument, "null argument");
    episim::ModelParams core = to_core(*params);
    RunOpts run = to_core(opts);
    episim::ClusterConfig config0 =
        initial_config(site_coords, counts, n_sites, core.d);

    episim::SimulateOptions sim;
    sim.horizon = run.horizon;
    sim.seed = run.seed;
    sim.event_budget = run.event_budget;
    sim.snapshot_interval = snapshot_interval;
    episim::Trajectory trajectory = episim::simulate(config0, core, sim);

    out->final_time = trajectory.final_time;
    out->event_count = trajectory.event_count;
    out->truncated = trajectory.truncated ? 1 : 0;
    out->extinct = trajectory.extinct() ? 1 : 0;
    out->extinction_time = trajectory.extinction_time;
    out->final_total = trajectory.final_config.total();

    if (out_dir != nullptr) {
      std::filesystem::path dir(out_dir);
      episim::ensure_directory(dir);
      episim::write_trajectory_jsonl(dir / "trajectory.jsonl", trajectory,
                                     core.d);
      nlohmann::json config = {{"model", model_json(*params)},
                               {"run", opts_json(run)},
                               {"snapshot_interval", snapshot_interval},
                               {"n_initial_sites", n_sites}};
      episim::write_manifest(dir, "simulate", config, run.seed,
                             clock.seconds());
    }
    if (trajectory.truncated) {
      throw episim::Error(episim::ErrorCode::BudgetExceeded,
                          "event budget exceeded; trajectory flagged TRUNCATED");
    }
  });
}

epi_status epi_survival(const epi_model_params* params,
                        const int64_t* site_coords, const int64_t* counts,
                        size_t n_sites, const epi_run_opts* opts,
                        uint64_t replicas, const char* out_dir,
                        epi_survival_result* out) {
  return guarded([&]() {
    WallClock clock;
    episim::require(params != nullptr && out != nullptr,
                    episim::ErrorCode::InvalidArgument, "null argument");
    episim::ModelParams core = to_core(*params);
    RunOpts run = to_core(opts);
    episim::ClusterConfig config0 =
        initial_config(site_coords, counts, n_sites, core.d);

    episim::SurvivalRunOptions options;
    options.event_budget = run.event_budget;
    options.survival_count_cutoff = run.cutoff;
    options.jobs = run.jobs;
    episim::SurvivalEstimate estimate = episim::survival_probability(
        core, config0, run.horizon, replicas, run.seed, options);

    out->p_hat = estimate.p_hat;
    out->ci_halfwidth = estimate.ci_halfwidth;
    out->replicas = estimate.replicas;
    out->survivors = estimate.survivors;
    out->truncated = estimate.truncated;
    out->early_decided = estimate.early_decided;

    if (out_dir != nullptr) {
      std::filesystem::path dir(out_dir);
      episim::ensure_directory(dir);
      episim::write_survival_csv(dir / "survival.csv", core.phi, estimate);
      nlohmann::json config = {{"model", model_json(*params)},
                               {"run", opts_json(run)},
                               {"replicas", replicas}};
      episim::write_manifest(dir, "survival", config, run.seed,
                             clock.seconds());
    }
  });
}

epi_status epi_phi_c(const epi_model_params* base, double phi_lo, double phi_hi,
                     double threshold, double tolerance,
                     const epi_run_opts* opts, uint64_t replicas_per_probe,
                     const char* out_dir, epi_phic_result* out) {
  return guarded([&]() {
    WallClock clock;
    episim::require(base != nullptr && out != nullptr,
                    episim::ErrorCode::InvalidArgument, "null argument");
    episim::ModelParams core = to_core(*base);
    RunOpts run = to_core(opts);

    episim::PhiSearchCriterion criterion;
    criterion.horizon = run.horizon;
    criterion.replicas = replicas_per_probe;
    criterion.threshold = threshold;
    episim::SurvivalRunOptions options;
    options.event_budget = run.event_budget;
    options.survival_count_cutoff = run.cutoff;
    options.jobs = run.jobs;

    episim::PhiSearchResult result = episim::critical_phi_search(
        core, episim::ClusterConfig::single_seed(core.d), phi_lo, phi_hi,
        criterion, tolerance, run.seed, options);

    out->phi_c = result.phi_c;
    out->bracket_lo = result.bracket_lo;
    out->bracket_hi = result.bracket_hi;
    out->probes = result.probes.size();

    if (out_dir != nullptr) {
      std::filesystem::path dir(out_dir);
      episim::ensure_directory(dir);
      episim::write_probes_csv(dir / "phic_probes.csv", result);
      nlohmann::json config = {{"model", model_json(*base)},
                               {"run", opts_json(run)},
                               {"phi_lo", phi_lo},
                               {"phi_hi", phi_hi},
                               {"threshold", threshold},
                               {"tolerance", tolerance},
                               {"replicas_per_probe", replicas_per_probe},
                               {"phi_c", result.phi_c}};
      episim::write_manifest(dir, "phi-c", config, run.seed, clock.seconds());
    }
  });
}

namespace {

epi_status couple_common(const episim::CoupledPair& pair,
                         episim::DominationKind kind, const RunOpts& run,
                         uint64_t replicas, const char* out_dir,
                         const nlohmann::json& config_json,
                         const char* subcommand, epi_couple_result* out) {
  return guarded([&]() {
    WallClock clock;
    episim::require(out != nullptr, episim::ErrorCode::InvalidArgument,
                    "null output");
    episim::require(replicas >= 1, episim::ErrorCode::InvalidArgument,
                    "replicas must be >= 1");
    std::vector<uint64_t> violations(replicas, 0);
    std::vector<uint64_t> events(replicas, 0);
    std::vector<uint8_t> truncated(replicas, 0);
    std::vector<double> coupled_total_a(replicas, 0.0);
    std::vector<double> coupled_total_b(replicas, 0.0);
    episim::CoupledTrajectory last;
    episim::OrderingCheckResult last_check;

    episim::parallel_for(replicas, run.jobs, [&](std::size_t rep) {
      episim::CoupledSimulateOptions options;
      options.horizon = run.horizon;
      options.seed = episim::derive_seed(run.seed, rep + 1, 0x636f7570);
      options.event_budget = run.event_budget;
      episim::CoupledTrajectory trajectory =
          episim::coupled_simulate(pair, options);
      episim::OrderingCheckResult check =
          episim::ordering_check(trajectory, kind);
      violations[rep] = check.ok ? 0 : 1;
      events[rep] = trajectory.events.size();
      truncated[rep] = trajectory.truncated ? 1 : 0;
      coupled_total_a[rep] = static_cast<double>(trajectory.final_a.total());
      coupled_total_b[rep] = static_cast<double>(trajectory.final_b.total());
      if (rep == replicas - 1) {
        last = std::move(trajectory);
        last_check = check;
      }
    });

    out->violations = 0;
    out->events_checked = 0;
    out->replicas = replicas;
    out->truncated_replicas = 0;
    for (std::size_t i = 0; i < replicas; ++i) {
      out->violations += violations[i];
      out->events_checked += events[i];
      out->truncated_replicas += truncated[i];
    }

    if (out_dir != nullptr) {
      std::filesystem::path dir(out_dir);
      episim::ensure_directory(dir);
      episim::write_couple_report_json(dir / "couple_report.json", last,
                                       last_check, replicas, out->violations,
                                       out->events_checked);
      episim::write_coupled_events_jsonl(dir / "coupled_events.jsonl", last,
                                         pair.params_a.d);

      // Marginal-correctness KS summary: final infected totals of each
      // coupled marginal against independent single-process runs at the
      // same horizon. Only meaningful when no replica was budget-truncated
      // (the totals are then all sampled at the common time).
      nlohmann::json ks_summary;
      if (out->truncated_replicas == 0) {
        std::vector<double> single_a(replicas, 0.0), single_b(replicas, 0.0);
        episim::parallel_for(replicas, run.jobs, [&](std::size_t rep) {
          episim::SimulateOptions single;
          single.horizon = run.horizon;
          single.event_budget = run.event_budget;
          single.seed = episim::derive_seed(run.seed, rep + 1, 0x6d617267);
          single_a[rep] = static_cast<double>(
              episim::simulate(pair.config_a, pair.params_a, single)
                  .final_config.total());
          single.seed = episim::derive_seed(run.seed, rep + 1, 0x6d626d62);
          single_b[rep] = static_cast<double>(
              episim::simulate(pair.config_b, pair.params_b, single)
                  .final_config.total());
        });
        episim::KsResult ks_a = episim::ks_two_sample(coupled_total_a, single_a);
        episim::KsResult ks_b = episim::ks_two_sample(coupled_total_b, single_b);
        ks_summary["marginal_a"] = {{"statistic", ks_a.statistic},
                                    {"p_value", ks_a.p_value}};
        ks_summary["marginal_b"] = {{"statistic", ks_b.statistic},
                                    {"p_value", ks_b.p_value}};
        ks_summary["replicas"] = replicas;
      } else {
        ks_summary["skipped_truncated_replicas"] = out->truncated_replicas;
      }
      episim::write_json_file(dir / "ks_summary.json", ks_summary);
      episim::write_manifest(dir, subcommand, config_json, run.seed,
                             clock.seconds());
    }
  });
}

}  // namespace

epi_status epi_couple_ordered(const epi_model_params* params_a,
                              const epi_model_params* params_b,
                              const int64_t* site_coords, const int64_t* counts,
                              size_t n_sites, const epi_run_opts* opts,
                              uint64_t replicas, const char* out_dir,
                              epi_couple_result* out) {
  try {
    episim::require(params_a != nullptr && params_b != nullptr,
                    episim::ErrorCode::InvalidArgument, "null params");
    episim::CoupledPair pair;
    pair.params_a = to_core(*params_a);
    pair.params_b = to_core(*params_b);
    RunOpts run = to_core(opts);
    pair.config_a = initial_config(site_coords, counts, n_sites, pair.params_a.d);
    pair.config_b = pair.config_a;
    pair.ordered = true;
    nlohmann::json config = {{"model_a", model_json(*params_a)},
                             {"model_b", model_json(*params_b)},
                             {"run", opts_json(run)},
                             {"replicas", replicas},
                             {"mode", "ordered"}};
    return couple_common(pair, episim::DominationKind::Counts, run, replicas,
                         out_dir, config, "couple-check", out);
  } catch (const episim::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  }
}

epi_status epi_couple_contact(const epi_model_params* params,
                              const int64_t* site_coords, const int64_t* counts,
                              size_t n_sites, const epi_run_opts* opts,
                              uint64_t replicas, const char* out_dir,
                              epi_couple_result* out) {
  try {
    episim::require(params != nullptr, episim::ErrorCode::InvalidArgument,
                    "null params");
    episim::CoupledPair pair;
    pair.params_a = to_core(*params);
    pair.params_b = pair.params_a;
    pair.params_b.beta = 0.0;
    pair.params_b.phi = 0.0;
    pair.params_b.kappa_cap = 1;
    RunOpts run = to_core(opts);
    pair.config_a = initial_config(site_coords, counts, n_sites, pair.params_a.d);
    for (const auto& [key, count] : pair.config_a.counts) {
      if (count > 0) pair.config_b.counts[key] = 1;
    }
    pair.ordered = true;
    nlohmann::json config = {{"model", model_json(*params)},
                             {"run", opts_json(run)},
                             {"replicas", replicas},
                             {"mode", "contact"}};
    return couple_common(pair, episim::DominationKind::Occupancy, run, replicas,
                         out_dir, config, "couple-check", out);
  } catch (const episim::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  }
}

epi_status epi_tilde_rates(const epi_tilde_params* params, double a, double b,
                           double out_rates[5]) {
  return guarded([&]() {
    episim::require(params != nullptr && out_rates != nullptr,
                    episim::ErrorCode::InvalidArgument, "null argument");
    episim::TildeRates r = episim::tilde_rates(a, b, to_core(*params));
    out_rates[0] = r.beta1;
    out_rates[1] = r.delta1;
    out_rates[2] = r.beta2;
    out_rates[3] = r.delta2;
    out_rates[4] = r.g;
  });
}

epi_status epi_tilde_table(const epi_tilde_params* params, const double* grid,
                           size_t grid_len, uint64_t mc_samples, uint64_t seed,
                           const char* out_dir, double* max_z_out) {
  return guarded([&]() {
    WallClock clock;
    episim::require(params != nullptr && grid != nullptr && grid_len >= 1,
                    episim::ErrorCode::InvalidArgument,
                    "tilde table needs a nonempty grid");
    episim::require(mc_samples >= 2, episim::ErrorCode::InvalidArgument,
                    "mc_samples must be >= 2");
    episim::TildeParams core = to_core(*params);
    std::vector<double> points(grid, grid + grid_len);

    double max_z = 0.0;
    uint64_t index = 0;
    for (double a : points) {
      for (double b : points) {
        episim::TildeRates closed = episim::tilde_rates(a, b, core);
        episim::TildeMcTable mc = episim::tilde_rates_mc(
            a, b, core, mc_samples, episim::derive_seed(seed, ++index, 0x74696c64));
        const double closed_v[5] = {closed.beta1, closed.delta1, closed.beta2,
                                    closed.delta2, closed.g};
        const episim::McEstimate* est[5] = {&mc.beta1, &mc.delta1, &mc.beta2,
                                            &mc.delta2, &mc.g};
        for (int k = 0; k < 5; ++k) {
          if (est[k]->stderr_ > 0.0) {
            max_z = std::max(max_z, std::fabs(closed_v[k] - est[k]->mean) /
                                        est[k]->stderr_);
          } else {
            episim::require(closed_v[k] == est[k]->mean,
                            episim::ErrorCode::InvalidArgument,
                            "degenerate MC disagrees with closed form");
          }
        }
      }
    }
    if (max_z_out != nullptr) *max_z_out = max_z;

    if (out_dir != nullptr) {
      std::filesystem::path dir(out_dir);
      episim::ensure_directory(dir);
      episim::write_tilde_table_csv(dir / "tilde_table.csv", core, points,
                                    mc_samples, seed);
      nlohmann::json config = {{"tilde", tilde_json(*params)},
                               {"grid", points},
                               {"mc_samples", mc_samples},
                               {"max_z", max_z}};
      episim::write_manifest(dir, "tilde-table", config, seed, clock.seconds());
    }
  });
}

epi_status epi_profile_eval(const epi_profile_spec* spec, size_t n,
                            double* out_values) {
  return guarded([&]() {
    episim::require(spec != nullptr && out_values != nullptr && n >= 1,
                    episim::ErrorCode::InvalidArgument, "null argument");
    auto fn = profile_fn(*spec);
    for (size_t i = 0; i < n; ++i) {
      out_values[i] = fn(static_cast<double>(i) / static_cast<double>(n));
    }
  });
}

epi_status epi_pde_solve(const epi_tilde_params* params, const double* m1,
                         const double* m2, size_t grid, double horizon,
                         double cfl_safety, const double* output_times,
                         size_t n_times, const char* out_dir,
                         epi_pde_result* out) {
  return guarded([&]() {
    WallClock clock;
    episim::require(params != nullptr && m1 != nullptr && m2 != nullptr &&
                        out != nullptr,
                    episim::ErrorCode::InvalidArgument, "null argument");
    episim::TildeParams core = to_core(*params);
    episim::Profile p1, p2;
    p1.values.assign(m1, m1 + grid);
    p2.values.assign(m2, m2 + grid);
    p1.apply_floor();
    p2.apply_floor();
    episim::PdeConfig config;
    if (cfl_safety > 0.0) config.cfl_safety = cfl_safety;
    std::vector<double> times;
    if (output_times != nullptr && n_times > 0) {
      times.assign(output_times, output_times + n_times);
    } else {
      times = {0.0, horizon};
    }
    episim::PdeReport report =
        episim::pde_solve(p1, p2, core, horizon, config, times);
    out->steps = report.steps;
    out->clip_count = report.clip_count;
    out->max_mass_residual = report.max_mass_residual;
    out->min_value = report.min_value;
    out->below_positivity_floor = report.below_positivity_floor ? 1 : 0;

    if (out_dir != nullptr) {
      std::filesystem::path dir(out_dir);
      episim::ensure_directory(dir);
      episim::write_pde_csv(dir / "pde.csv", report);
      nlohmann::json refinement = {
          {"steps", report.steps},
          {"clip_count", report.clip_count},
          {"clipped_mass", report.clipped_mass},
          {"max_mass_residual", report.max_mass_residual},
          {"min_value", report.min_value},
          {"below_positivity_floor", report.below_positivity_floor}};
      episim::write_json_file(dir / "pde_report.json", refinement);
      nlohmann::json config_json = {{"tilde", tilde_json(*params)},
                                    {"grid", grid},
                                    {"horizon", horizon},
                                    {"cfl_safety", config.cfl_safety},
                                    {"output_times", times}};
      episim::write_manifest(dir, "pde", config_json, 0, clock.seconds());
    }
  });
}

epi_status epi_pde_refine(const epi_tilde_params* params,
                          const epi_profile_spec* m1,
                          const epi_profile_spec* m2, size_t grid,
                          double horizon, double cfl_safety,
                          const char* out_dir, epi_pde_refine_result* out) {
  return guarded([&]() {
    episim::require(params != nullptr && m1 != nullptr && m2 != nullptr &&
                        out != nullptr && grid >= 3,
                    episim::ErrorCode::InvalidArgument, "null argument");
    episim::TildeParams core = to_core(*params);
    episim::PdeConfig config;
    if (cfl_safety > 0.0) config.cfl_safety = cfl_safety;
    episim::RefinementReport report = episim::pde_refinement_check(
        profile_fn(*m1), profile_fn(*m2), grid, core, horizon, config);
    out->mean_shift[0] = report.delta[0];
    out->mean_shift[1] = report.delta[1];
    out->observed_order = report.observed_order;

    if (out_dir != nullptr) {
      std::filesystem::path dir(out_dir);
      episim::ensure_directory(dir);
      nlohmann::json refinement = {
          {"grid", grid},
          {"horizon", horizon},
          {"mean_shift_lambda1", report.delta[0]},
          {"mean_shift_lambda2", report.delta[1]},
          {"coarse_mean", {report.coarse_mean[0], report.coarse_mean[1]}},
          {"fine_mean", {report.fine_mean[0], report.fine_mean[1]}},
          {"observed_order", report.observed_order}};
      episim::write_json_file(dir / "pde_refinement.json", refinement);
    }
  });
}

epi_status epi_two_species(const epi_tilde_params* params, int32_t n_sites,
                           const double* m1, const double* m2,
                           const epi_run_opts* opts,
                           const double* snapshot_times, size_t n_times,
                           const char* out_dir, epi_two_species_result* out) {
  return guarded([&]() {
    WallClock clock;
    episim::require(params != nullptr && m1 != nullptr && m2 != nullptr &&
                        out != nullptr,
                    episim::ErrorCode::InvalidArgument, "null argument");
    RunOpts run = to_core(opts);
    episim::TwoSpeciesParams core;
    core.rates = to_core(*params);
    core.N = n_sites;
    core.validate();

    episim::Profile p1, p2;
    p1.values.assign(m1, m1 + n_sites);
    p2.values.assign(m2, m2 + n_sites);
    p1.apply_floor();
    p2.apply_floor();

    episim::TsSimOptions options;
    options.horizon = run.horizon;
    options.seed = run.seed;
    options.event_budget = run.event_budget;
    options.tau = run.tau;
    if (snapshot_times != nullptr && n_times > 0) {
      options.snapshot_times.assign(snapshot_times, snapshot_times + n_times);
    } else {
      options.snapshot_times = {0.0, run.horizon};
    }
    episim::TwoSpeciesConfig config0 = episim::TwoSpeciesConfig::poisson_init(
        p1, p2, episim::derive_seed(run.seed, 0x696e6974));
    episim::TsTrajectory trajectory =
        episim::simulate_torus(config0, core, options);

    out->event_count = trajectory.event_count;
    out->truncated = trajectory.truncated ? 1 : 0;
    out->final_total_eta = trajectory.final_config.total_eta();
    out->final_total_xi = trajectory.final_config.total_xi();

    if (out_dir != nullptr) {
      std::filesystem::path dir(out_dir);
      episim::ensure_directory(dir);
      episim::write_two_species_snapshots_csv(dir / "snapshots.csv", trajectory);
      episim::write_pairings_csv(dir / "pairings.csv", trajectory,
                                 episim::standard_observables(), 0);
      nlohmann::json config_json = {{"tilde", tilde_json(*params)},
                                    {"N", n_sites},
                                    {"run", opts_json(run)},
                                    {"snapshot_times", options.snapshot_times}};
      episim::write_manifest(dir, "two-species", config_json, run.seed,
                             clock.seconds());
    }
    if (trajectory.truncated) {
      throw episim::Error(episim::ErrorCode::BudgetExceeded,
                          "event budget exceeded; trajectory flagged TRUNCATED");
    }
  });
}

epi_status epi_hydro_converge(const epi_tilde_params* params,
                              const epi_profile_spec* m1,
                              const epi_profile_spec* m2,
                              const int32_t* torus_sizes, size_t n_sizes,
                              uint64_t replicas, const double* times,
                              size_t n_times, uint64_t seed, int32_t jobs,
                              const char* out_dir, epi_converge_result* out) {
  return guarded([&]() {
    WallClock clock;
    episim::require(params != nullptr && m1 != nullptr && m2 != nullptr &&
                        torus_sizes != nullptr && times != nullptr &&
                        out != nullptr && n_sizes >= 1 && n_times >= 1,
                    episim::ErrorCode::InvalidArgument, "null argument");
    episim::ConvergenceSettings settings;
    settings.m1 = profile_fn(*m1);
    settings.m2 = profile_fn(*m2);
    settings.params = to_core(*params);
    settings.torus_sizes.assign(torus_sizes, torus_sizes + n_sizes);
    settings.replicas = replicas;
    settings.times.assign(times, times + n_times);
    settings.observables = episim::standard_observables();
    settings.master_seed = seed;
    settings.jobs = jobs;

    episim::ConvergenceReport report = episim::convergence_experiment(settings);

    // Monotone decay check: smallest vs largest N per (time, observable,
    // species) cell.
    const int32_t n_min =
        *std::min_element(settings.torus_sizes.begin(), settings.torus_sizes.end());
    const int32_t n_max =
        *std::max_element(settings.torus_sizes.begin(), settings.torus_sizes.end());
    bool monotone = true;
    double max_error_largest = 0.0;
    for (const auto& cell : report.cells) {
      if (cell.N != n_max) continue;
      max_error_largest = std::max(max_error_largest, cell.abs_error);
      for (const auto& other : report.cells) {
        if (other.N == n_min && other.time == cell.time &&
            other.observable == cell.observable &&
            other.species == cell.species) {
          if (!(cell.abs_error < other.abs_error)) monotone = false;
        }
      }
    }
    out->monotone = monotone ? 1 : 0;
    out->max_error_largest_n = max_error_largest;
    out->refined_target_shift = report.refined_target_shift;
    out->min_stderr = report.min_stderr;

    if (out_dir != nullptr) {
      std::filesystem::path dir(out_dir);
      episim::ensure_directory(dir);
      episim::write_convergence_csv(dir / "convergence.csv", report);
      nlohmann::json config_json = {
          {"tilde", tilde_json(*params)},
          {"m1", {{"kind", m1->kind}, {"level", m1->level}, {"amplitude", m1->amplitude}}},
          {"m2", {{"kind", m2->kind}, {"level", m2->level}, {"amplitude", m2->amplitude}}},
          {"torus_sizes", settings.torus_sizes},
          {"replicas", replicas},
          {"times", settings.times},
          {"jobs", jobs}};
      episim::write_manifest(dir, "hydro-converge", config_json, seed,
                             clock.seconds());
    }
  });
}

epi_status epi_window(const epi_tilde_params* params,
                      const epi_profile_spec* m1, const epi_profile_spec* m2,
                      int32_t n_scale, int32_t window_a,
                      const int32_t* c_ladder, size_t n_c, double horizon,
                      uint64_t replicas, uint64_t seed, int32_t jobs,
                      const char* out_dir, double* mean_disc_out) {
  return guarded([&]() {
    WallClock clock;
    episim::require(params != nullptr && m1 != nullptr && m2 != nullptr &&
                        c_ladder != nullptr && n_c >= 1,
                    episim::ErrorCode::InvalidArgument, "null argument");
    episim::WindowSettings settings;
    settings.m1 = profile_fn(*m1);
    settings.m2 = profile_fn(*m2);
    settings.params = to_core(*params);
    settings.N = n_scale;
    settings.A = window_a;
    settings.c_ladder.assign(c_ladder, c_ladder + n_c);
    settings.horizon = horizon;
    settings.replicas = replicas;
    settings.master_seed = seed;
    settings.jobs = jobs;

    episim::WindowReport report = episim::window_experiment(settings);
    if (mean_disc_out != nullptr) {
      for (size_t i = 0; i < n_c; ++i) {
        mean_disc_out[i] = report.cells[i].mean_discrepancy;
      }
    }

    if (out_dir != nullptr) {
      std::filesystem::path dir(out_dir);
      episim::ensure_directory(dir);
      episim::write_window_csv(dir / "window.csv", settings, report);
      nlohmann::json config_json = {
          {"tilde", tilde_json(*params)},
          {"N", n_scale},
          {"A", window_a},
          {"c_ladder", settings.c_ladder},
          {"horizon", horizon},
          {"replicas", replicas},
          {"jobs", jobs}};
      episim::write_manifest(dir, "window", config_json, seed, clock.seconds());
    }
  });
}

}  // extern "C"
