// episim command-line interface. Parses flags (or a JSON config file with
// flags taking precedence), dispatches to the shared-library C API, and
// reports a short summary. Exit codes: 0 ok, 2 invalid configuration,
// 3 event budget exceeded, 4 I/O failure.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "episim/episim.h"

namespace {

using nlohmann::json;

int exit_code_of(epi_status status) {
  switch (status) {
    case EPI_OK:
      return 0;
    case EPI_E_INVALID:
      return 2;
    case EPI_E_BUDGET:
      return 3;
    case EPI_E_IO:
      return 4;
    default:
      return 5;
  }
}

int finish(epi_status status) {
  if (status != EPI_OK) {
    std::fprintf(stderr, "error: %s\n", epi_last_error());
  }
  return exit_code_of(status);
}

std::string default_out_dir() {
  const char* env = std::getenv("EPISIM_OUT_DIR");
  return env != nullptr && env[0] != '\0' ? env : "episim-out";
}

// Pre-scan for --config and load the JSON; flag values parsed later by
// CLI11 override anything set here.
json load_config(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      std::ifstream in(argv[i + 1]);
      if (!in.good()) {
        std::fprintf(stderr, "error: cannot open config file %s\n", argv[i + 1]);
        std::exit(2);
      }
      json config;
      try {
        in >> config;
      } catch (const std::exception& e) {
        std::fprintf(stderr, "error: config file parse failure: %s\n", e.what());
        std::exit(2);
      }
      return config;
    }
  }
  return json::object();
}

template <typename T>
void seed_default(const json& config, const char* key, T& value) {
  if (config.contains(key)) {
    try {
      value = config.at(key).get<T>();
    } catch (const std::exception&) {
      std::fprintf(stderr, "error: config key '%s' has the wrong type\n", key);
      std::exit(2);
    }
  }
}

int64_t parse_kappa(const std::string& text) {
  if (text == "inf" || text == "INF" || text == "infinite") return 0;
  try {
    std::size_t pos = 0;
    long long v = std::stoll(text, &pos);
    if (pos != text.size() || v < 1) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    std::fprintf(stderr,
                 "error: --kappa must be a positive integer or 'inf'\n");
    std::exit(2);
  }
}

int32_t parse_recovery(const std::string& model) {
  if (model == "irp" || model == "IRP") return EPI_RECOVERY_INDIVIDUAL;
  if (model == "crp" || model == "CRP") return EPI_RECOVERY_CLUSTER;
  std::fprintf(stderr, "error: --model must be 'irp' or 'crp'\n");
  std::exit(2);
}

// Profile grammar: "const:LEVEL", "cos:LEVEL,AMP", "sin:LEVEL,AMP".
epi_profile_spec parse_profile(const std::string& text) {
  epi_profile_spec spec{EPI_PROFILE_CONST, 0.0, 0.0};
  auto colon = text.find(':');
  std::string kind = text.substr(0, colon);
  std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
  try {
    if (kind == "const") {
      spec.kind = EPI_PROFILE_CONST;
      spec.level = std::stod(args);
    } else if (kind == "cos" || kind == "sin") {
      spec.kind = kind == "cos" ? EPI_PROFILE_COSINE : EPI_PROFILE_SINE;
      auto comma = args.find(',');
      if (comma == std::string::npos) throw std::invalid_argument(args);
      spec.level = std::stod(args.substr(0, comma));
      spec.amplitude = std::stod(args.substr(comma + 1));
    } else {
      throw std::invalid_argument(kind);
    }
  } catch (const std::exception&) {
    std::fprintf(stderr,
                 "error: profile must be const:LEVEL, cos:LEVEL,AMP or "
                 "sin:LEVEL,AMP (got '%s')\n",
                 text.c_str());
    std::exit(2);
  }
  return spec;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    std::string piece = text.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!piece.empty()) {
      try {
        out.push_back(std::stod(piece));
      } catch (const std::exception&) {
        std::fprintf(stderr, "error: bad numeric list entry '%s'\n",
                     piece.c_str());
        std::exit(2);
      }
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<int32_t> parse_int_list(const std::string& text) {
  std::vector<int32_t> out;
  for (double v : parse_double_list(text)) out.push_back(static_cast<int32_t>(v));
  return out;
}

struct CommonModelFlags {
  double lambda = 0.0, beta = 0.0, phi = 0.0;
  std::string kappa = "inf";
  std::string model = "irp";
  int dim = 1;

  void attach(CLI::App* cmd, const json& config) {
    seed_default(config, "lambda", lambda);
    seed_default(config, "beta", beta);
    seed_default(config, "phi", phi);
    seed_default(config, "kappa", kappa);
    seed_default(config, "model", model);
    seed_default(config, "dim", dim);
    cmd->add_option("--lambda", lambda, "outside infection rate (healthy clusters)");
    cmd->add_option("--beta", beta, "outside infection rate (infected clusters)");
    cmd->add_option("--phi", phi, "within-cluster infection rate");
    cmd->add_option("--kappa", kappa, "cluster size cap, integer or 'inf'");
    cmd->add_option("--model", model, "recovery mechanism: irp or crp");
    cmd->add_option("--dim", dim, "lattice dimension (1..3)");
  }

  epi_model_params build() const {
    epi_model_params p{};
    p.lambda = lambda;
    p.beta = beta;
    p.phi = phi;
    p.kappa_cap = parse_kappa(kappa);
    p.dim = dim;
    p.recovery = parse_recovery(model);
    return p;
  }
};

struct CommonTildeFlags {
  double alpha1 = 0.0, alpha2 = 0.0, kd = 0.0;
  double lambda = 0.0, beta = 0.0, phi = 0.0;
  bool no_recovery = false;

  void attach(CLI::App* cmd, const json& config) {
    seed_default(config, "alpha1", alpha1);
    seed_default(config, "alpha2", alpha2);
    seed_default(config, "kd", kd);
    seed_default(config, "lambda", lambda);
    seed_default(config, "beta", beta);
    seed_default(config, "phi", phi);
    cmd->add_option("--alpha1", alpha1, "healthy birth coefficient");
    cmd->add_option("--alpha2", alpha2, "infected birth coefficient");
    cmd->add_option("--kd", kd, "death coefficient");
    cmd->add_option("--lambda", lambda, "outside infection rate (new)");
    cmd->add_option("--beta", beta, "outside infection rate (ongoing)");
    cmd->add_option("--phi", phi, "within infection rate");
    seed_default(config, "no-recovery", no_recovery);
    cmd->add_flag("--no-recovery", no_recovery,
                  "drop the rate-1 recovery channel (diffusion-only runs)");
  }

  epi_tilde_params build() const {
    return epi_tilde_params{alpha1, alpha2,     kd, lambda, beta, phi,
                            no_recovery ? 1 : 0};
  }
};

struct CommonRunFlags {
  double horizon = 100.0;
  uint64_t seed = 1;
  uint64_t budget = 0;
  uint64_t cutoff = 0;
  int32_t jobs = 0;
  std::string out = default_out_dir();

  void attach(CLI::App* cmd, const json& config) {
    seed_default(config, "horizon", horizon);
    seed_default(config, "seed", seed);
    seed_default(config, "budget", budget);
    seed_default(config, "cutoff", cutoff);
    seed_default(config, "jobs", jobs);
    seed_default(config, "out", out);
    cmd->add_option("--horizon", horizon, "time horizon");
    cmd->add_option("--seed", seed, "master seed");
    cmd->add_option("--budget", budget, "event budget per replica (0: default)");
    cmd->add_option("--cutoff", cutoff,
                    "survival count cutoff per replica (0: default)");
    cmd->add_option("--jobs", jobs, "worker threads (0: all cores)");
    cmd->add_option("--out", out, "output directory");
  }

  epi_run_opts build() const {
    epi_run_opts o{};
    o.horizon = horizon;
    o.seed = seed;
    o.event_budget = budget;
    o.survival_count_cutoff = cutoff;
    o.jobs = jobs;
    return o;
  }
};

}  // namespace

int main(int argc, char** argv) {
  json config = load_config(argc, argv);

  CLI::App app{"episim: lattice epidemic processes, coupling checks, and "
               "hydrodynamic-limit experiments"};
  app.require_subcommand(1);
  app.fallthrough();  // lets --config appear after the subcommand
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (flags override)");

  // --- simulate -----------------------------------------------------------
  auto* cmd_sim = app.add_subcommand("simulate", "single CRP/IRP trajectory");
  CommonModelFlags sim_model;
  CommonRunFlags sim_run;
  double sim_snapshot_dt = 0.0;
  sim_model.attach(cmd_sim, config);
  sim_run.attach(cmd_sim, config);
  seed_default(config, "snapshot-dt", sim_snapshot_dt);
  cmd_sim->add_option("--snapshot-dt", sim_snapshot_dt,
                      "snapshot interval for trajectory.jsonl");

  // --- survival -----------------------------------------------------------
  auto* cmd_surv = app.add_subcommand("survival", "finite-horizon survival probability");
  CommonModelFlags surv_model;
  CommonRunFlags surv_run;
  uint64_t surv_replicas = 1000;
  surv_model.attach(cmd_surv, config);
  surv_run.attach(cmd_surv, config);
  seed_default(config, "replicas", surv_replicas);
  cmd_surv->add_option("--replicas", surv_replicas, "number of replicas");

  // --- phi-c --------------------------------------------------------------
  auto* cmd_phic = app.add_subcommand("phi-c", "bisection for the critical phi");
  CommonModelFlags phic_model;
  CommonRunFlags phic_run;
  double phi_lo = 0.0, phi_hi = 4.0, threshold = 0.05, tol = 0.1;
  uint64_t probe_replicas = 500;
  phic_model.attach(cmd_phic, config);
  phic_run.attach(cmd_phic, config);
  seed_default(config, "phi-lo", phi_lo);
  seed_default(config, "phi-hi", phi_hi);
  seed_default(config, "threshold", threshold);
  seed_default(config, "tol", tol);
  seed_default(config, "probe-replicas", probe_replicas);
  cmd_phic->add_option("--phi-lo", phi_lo, "bracket lower end");
  cmd_phic->add_option("--phi-hi", phi_hi, "bracket upper end");
  cmd_phic->add_option("--threshold", threshold, "survival threshold");
  cmd_phic->add_option("--tol", tol, "bracket width tolerance");
  cmd_phic->add_option("--probe-replicas", probe_replicas, "replicas per probe");

  // --- couple-check -------------------------------------------------------
  auto* cmd_couple = app.add_subcommand("couple-check",
                                        "shared-clock coupling verification");
  CommonModelFlags couple_model;
  CommonRunFlags couple_run;
  std::string couple_mode = "ordered";
  double lambda_b = -1.0, beta_b = -1.0, phi_b = -1.0;
  std::string kappa_b;
  uint64_t couple_replicas = 100;
  couple_model.attach(cmd_couple, config);
  couple_run.attach(cmd_couple, config);
  seed_default(config, "mode", couple_mode);
  seed_default(config, "lambda-b", lambda_b);
  seed_default(config, "beta-b", beta_b);
  seed_default(config, "phi-b", phi_b);
  seed_default(config, "kappa-b", kappa_b);
  seed_default(config, "replicas", couple_replicas);
  cmd_couple->add_option("--mode", couple_mode, "ordered or contact");
  cmd_couple->add_option("--lambda-b", lambda_b, "marginal B lambda (ordered mode)");
  cmd_couple->add_option("--beta-b", beta_b, "marginal B beta (ordered mode)");
  cmd_couple->add_option("--phi-b", phi_b, "marginal B phi (ordered mode)");
  cmd_couple->add_option("--kappa-b", kappa_b, "marginal B kappa (ordered mode)");
  cmd_couple->add_option("--replicas", couple_replicas, "coupled replicas");

  // --- tilde-table --------------------------------------------------------
  auto* cmd_tilde = app.add_subcommand("tilde-table",
                                       "tilde closed forms vs Monte Carlo");
  CommonTildeFlags tilde_flags;
  std::string tilde_grid = "0.5,1,2";
  uint64_t tilde_samples = 1000000;
  uint64_t tilde_seed = 1;
  std::string tilde_out = default_out_dir();
  tilde_flags.attach(cmd_tilde, config);
  seed_default(config, "grid", tilde_grid);
  seed_default(config, "samples", tilde_samples);
  seed_default(config, "seed", tilde_seed);
  seed_default(config, "out", tilde_out);
  cmd_tilde->add_option("--grid", tilde_grid, "comma list of intensities");
  cmd_tilde->add_option("--samples", tilde_samples, "Monte Carlo samples per point");
  cmd_tilde->add_option("--seed", tilde_seed, "seed");
  cmd_tilde->add_option("--out", tilde_out, "output directory");

  // --- two-species --------------------------------------------------------
  auto* cmd_ts = app.add_subcommand("two-species",
                                    "two-species process on the torus T_N");
  CommonTildeFlags ts_flags;
  CommonRunFlags ts_run;
  int32_t ts_n = 32;
  double ts_tau = 0.0;
  std::string ts_m1 = "const:1", ts_m2 = "const:1", ts_times;
  ts_flags.attach(cmd_ts, config);
  ts_run.attach(cmd_ts, config);
  seed_default(config, "n", ts_n);
  seed_default(config, "tau", ts_tau);
  seed_default(config, "m1", ts_m1);
  seed_default(config, "m2", ts_m2);
  seed_default(config, "times", ts_times);
  cmd_ts->add_option("--n", ts_n, "torus size N");
  cmd_ts->add_option("--tau", ts_tau,
                     "tau-leap step (exploratory; 0 = exact simulation)");
  cmd_ts->add_option("--m1", ts_m1, "healthy profile (const:+cos:/sin:)");
  cmd_ts->add_option("--m2", ts_m2, "infected profile");
  cmd_ts->add_option("--times", ts_times, "snapshot times, comma list");

  // --- pde ----------------------------------------------------------------
  auto* cmd_pde = app.add_subcommand("pde", "reaction-diffusion solver");
  CommonTildeFlags pde_flags;
  int32_t pde_grid = 256;
  double pde_horizon = 0.1, pde_cfl = 0.4;
  std::string pde_m1 = "const:1", pde_m2 = "const:1", pde_times;
  std::string pde_out = default_out_dir();
  pde_flags.attach(cmd_pde, config);
  seed_default(config, "grid", pde_grid);
  seed_default(config, "T", pde_horizon);
  seed_default(config, "cfl", pde_cfl);
  seed_default(config, "m1", pde_m1);
  seed_default(config, "m2", pde_m2);
  seed_default(config, "times", pde_times);
  seed_default(config, "out", pde_out);
  cmd_pde->add_option("--grid", pde_grid, "grid size M");
  cmd_pde->add_option("--T", pde_horizon, "final time");
  cmd_pde->add_option("--cfl", pde_cfl, "CFL safety factor in (0,1]");
  cmd_pde->add_option("--m1", pde_m1, "initial profile lambda1");
  cmd_pde->add_option("--m2", pde_m2, "initial profile lambda2");
  cmd_pde->add_option("--times", pde_times, "output times, comma list");
  cmd_pde->add_option("--out", pde_out, "output directory");

  // --- hydro-converge -----------------------------------------------------
  auto* cmd_conv = app.add_subcommand("hydro-converge",
                                      "empirical measures vs PDE across N");
  CommonTildeFlags conv_flags;
  std::string conv_sizes = "32,64,128", conv_times = "0.1";
  std::string conv_m1 = "cos:2,0.5", conv_m2 = "sin:1,0.5";
  uint64_t conv_replicas = 50, conv_seed = 1;
  int32_t conv_jobs = 0;
  std::string conv_out = default_out_dir();
  conv_flags.attach(cmd_conv, config);
  seed_default(config, "sizes", conv_sizes);
  seed_default(config, "times", conv_times);
  seed_default(config, "m1", conv_m1);
  seed_default(config, "m2", conv_m2);
  seed_default(config, "replicas", conv_replicas);
  seed_default(config, "seed", conv_seed);
  seed_default(config, "jobs", conv_jobs);
  seed_default(config, "out", conv_out);
  cmd_conv->add_option("--sizes", conv_sizes, "torus sizes, comma list");
  cmd_conv->add_option("--times", conv_times, "comparison times, comma list");
  cmd_conv->add_option("--m1", conv_m1, "healthy initial profile");
  cmd_conv->add_option("--m2", conv_m2, "infected initial profile");
  cmd_conv->add_option("--replicas", conv_replicas, "replicas per N (>= 30)");
  cmd_conv->add_option("--seed", conv_seed, "master seed");
  cmd_conv->add_option("--jobs", conv_jobs, "worker threads");
  cmd_conv->add_option("--out", conv_out, "output directory");

  // --- window -------------------------------------------------------------
  auto* cmd_win = app.add_subcommand("window",
                                     "torus-size insensitivity experiment");
  CommonTildeFlags win_flags;
  int32_t win_n = 16, win_a = 1, win_jobs = 0;
  std::string win_cs = "2,4,8";
  std::string win_m1 = "cos:2,0.5", win_m2 = "sin:1,0.5";
  double win_horizon = 0.05;
  uint64_t win_replicas = 20, win_seed = 1;
  std::string win_out = default_out_dir();
  win_flags.attach(cmd_win, config);
  seed_default(config, "n", win_n);
  seed_default(config, "a", win_a);
  seed_default(config, "cs", win_cs);
  seed_default(config, "m1", win_m1);
  seed_default(config, "m2", win_m2);
  seed_default(config, "horizon", win_horizon);
  seed_default(config, "replicas", win_replicas);
  seed_default(config, "seed", win_seed);
  seed_default(config, "jobs", win_jobs);
  seed_default(config, "out", win_out);
  cmd_win->add_option("--n", win_n, "scaling parameter N");
  cmd_win->add_option("--a", win_a, "window half-width multiplier A");
  cmd_win->add_option("--cs", win_cs, "C ladder, comma list, increasing");
  cmd_win->add_option("--m1", win_m1, "healthy initial profile");
  cmd_win->add_option("--m2", win_m2, "infected initial profile");
  cmd_win->add_option("--horizon", win_horizon, "time horizon");
  cmd_win->add_option("--replicas", win_replicas, "replicas");
  cmd_win->add_option("--seed", win_seed, "master seed");
  cmd_win->add_option("--jobs", win_jobs, "worker threads");
  cmd_win->add_option("--out", win_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  if (cmd_sim->parsed()) {
    epi_model_params params = sim_model.build();
    epi_run_opts opts = sim_run.build();
    epi_sim_summary summary{};
    epi_status status = epi_simulate(&params, nullptr, nullptr, 0, &opts,
                                     sim_snapshot_dt, sim_run.out.c_str(),
                                     &summary);
    if (status == EPI_OK || status == EPI_E_BUDGET) {
      std::printf("final_time=%g events=%llu truncated=%d extinct=%d total=%lld\n",
                  summary.final_time,
                  static_cast<unsigned long long>(summary.event_count),
                  summary.truncated, summary.extinct,
                  static_cast<long long>(summary.final_total));
    }
    return finish(status);
  }

  if (cmd_surv->parsed()) {
    epi_model_params params = surv_model.build();
    epi_run_opts opts = surv_run.build();
    epi_survival_result result{};
    epi_status status = epi_survival(&params, nullptr, nullptr, 0, &opts,
                                     surv_replicas, surv_run.out.c_str(),
                                     &result);
    if (status == EPI_OK) {
      std::printf("p_hat=%g ci=%g replicas=%llu survivors=%llu truncated=%llu "
                  "early=%llu\n",
                  result.p_hat, result.ci_halfwidth,
                  static_cast<unsigned long long>(result.replicas),
                  static_cast<unsigned long long>(result.survivors),
                  static_cast<unsigned long long>(result.truncated),
                  static_cast<unsigned long long>(result.early_decided));
    }
    return finish(status);
  }

  if (cmd_phic->parsed()) {
    epi_model_params params = phic_model.build();
    epi_run_opts opts = phic_run.build();
    epi_phic_result result{};
    epi_status status = epi_phi_c(&params, phi_lo, phi_hi, threshold, tol,
                                  &opts, probe_replicas, phic_run.out.c_str(),
                                  &result);
    if (status == EPI_OK) {
      std::printf("phi_c=%g bracket=[%g,%g] probes=%llu\n", result.phi_c,
                  result.bracket_lo, result.bracket_hi,
                  static_cast<unsigned long long>(result.probes));
    }
    return finish(status);
  }

  if (cmd_couple->parsed()) {
    epi_model_params params_a = couple_model.build();
    epi_run_opts opts = couple_run.build();
    epi_couple_result result{};
    epi_status status;
    if (couple_mode == "contact") {
      status = epi_couple_contact(&params_a, nullptr, nullptr, 0, &opts,
                                  couple_replicas, couple_run.out.c_str(),
                                  &result);
    } else if (couple_mode == "ordered") {
      epi_model_params params_b = params_a;
      if (lambda_b >= 0.0) params_b.lambda = lambda_b;
      if (beta_b >= 0.0) params_b.beta = beta_b;
      if (phi_b >= 0.0) params_b.phi = phi_b;
      if (!kappa_b.empty()) params_b.kappa_cap = parse_kappa(kappa_b);
      status = epi_couple_ordered(&params_a, &params_b, nullptr, nullptr, 0,
                                  &opts, couple_replicas,
                                  couple_run.out.c_str(), &result);
    } else {
      std::fprintf(stderr, "error: --mode must be 'ordered' or 'contact'\n");
      return 2;
    }
    if (status == EPI_OK) {
      std::printf("violations=%llu events_checked=%llu replicas=%llu "
                  "truncated=%llu\n",
                  static_cast<unsigned long long>(result.violations),
                  static_cast<unsigned long long>(result.events_checked),
                  static_cast<unsigned long long>(result.replicas),
                  static_cast<unsigned long long>(result.truncated_replicas));
    }
    return finish(status);
  }

  if (cmd_tilde->parsed()) {
    epi_tilde_params params = tilde_flags.build();
    std::vector<double> grid = parse_double_list(tilde_grid);
    double max_z = 0.0;
    epi_status status = epi_tilde_table(&params, grid.data(), grid.size(),
                                        tilde_samples, tilde_seed,
                                        tilde_out.c_str(), &max_z);
    if (status == EPI_OK) std::printf("max_z=%g\n", max_z);
    return finish(status);
  }

  if (cmd_ts->parsed()) {
    epi_tilde_params params = ts_flags.build();
    epi_run_opts opts = ts_run.build();
    epi_profile_spec m1 = parse_profile(ts_m1);
    epi_profile_spec m2 = parse_profile(ts_m2);
    std::vector<double> p1(static_cast<std::size_t>(ts_n));
    std::vector<double> p2(static_cast<std::size_t>(ts_n));
    epi_status status = epi_profile_eval(&m1, p1.size(), p1.data());
    if (status != EPI_OK) return finish(status);
    status = epi_profile_eval(&m2, p2.size(), p2.data());
    if (status != EPI_OK) return finish(status);
    std::vector<double> times = parse_double_list(ts_times);
    opts.tau_leap = ts_tau;
    epi_two_species_result result{};
    status = epi_two_species(&params, ts_n, p1.data(), p2.data(), &opts,
                             times.empty() ? nullptr : times.data(),
                             times.size(), ts_run.out.c_str(), &result);
    if (status == EPI_OK || status == EPI_E_BUDGET) {
      std::printf("events=%llu truncated=%d total_eta=%lld total_xi=%lld\n",
                  static_cast<unsigned long long>(result.event_count),
                  result.truncated,
                  static_cast<long long>(result.final_total_eta),
                  static_cast<long long>(result.final_total_xi));
    }
    return finish(status);
  }

  if (cmd_pde->parsed()) {
    epi_tilde_params params = pde_flags.build();
    epi_profile_spec m1 = parse_profile(pde_m1);
    epi_profile_spec m2 = parse_profile(pde_m2);
    std::vector<double> p1(static_cast<std::size_t>(pde_grid));
    std::vector<double> p2(static_cast<std::size_t>(pde_grid));
    epi_status status = epi_profile_eval(&m1, p1.size(), p1.data());
    if (status != EPI_OK) return finish(status);
    status = epi_profile_eval(&m2, p2.size(), p2.data());
    if (status != EPI_OK) return finish(status);
    std::vector<double> times = parse_double_list(pde_times);
    if (times.empty()) times = {0.0, pde_horizon};
    epi_pde_result result{};
    status = epi_pde_solve(&params, p1.data(), p2.data(), p1.size(),
                           pde_horizon, pde_cfl, times.data(), times.size(),
                           pde_out.c_str(), &result);
    if (status != EPI_OK) return finish(status);
    epi_pde_refine_result refinement{};
    if (pde_horizon > 0.0) {
      status = epi_pde_refine(&params, &m1, &m2, p1.size(), pde_horizon,
                              pde_cfl, pde_out.c_str(), &refinement);
      if (status != EPI_OK) return finish(status);
    }
    std::printf("steps=%llu clipped=%lld max_mass_residual=%g min=%g "
                "refine_shift=%g order=%g\n",
                static_cast<unsigned long long>(result.steps),
                static_cast<long long>(result.clip_count),
                result.max_mass_residual, result.min_value,
                std::max(refinement.mean_shift[0], refinement.mean_shift[1]),
                refinement.observed_order);
    return finish(status);
  }

  if (cmd_conv->parsed()) {
    epi_tilde_params params = conv_flags.build();
    epi_profile_spec m1 = parse_profile(conv_m1);
    epi_profile_spec m2 = parse_profile(conv_m2);
    std::vector<int32_t> sizes = parse_int_list(conv_sizes);
    std::vector<double> times = parse_double_list(conv_times);
    epi_converge_result result{};
    epi_status status = epi_hydro_converge(&params, &m1, &m2, sizes.data(),
                                           sizes.size(), conv_replicas,
                                           times.data(), times.size(),
                                           conv_seed, conv_jobs,
                                           conv_out.c_str(), &result);
    if (status == EPI_OK) {
      std::printf("monotone=%d max_error_largest_n=%g refined_shift=%g "
                  "min_stderr=%g\n",
                  result.monotone, result.max_error_largest_n,
                  result.refined_target_shift, result.min_stderr);
    }
    return finish(status);
  }

  if (cmd_win->parsed()) {
    epi_tilde_params params = win_flags.build();
    epi_profile_spec m1 = parse_profile(win_m1);
    epi_profile_spec m2 = parse_profile(win_m2);
    std::vector<int32_t> ladder = parse_int_list(win_cs);
    std::vector<double> disc(ladder.size(), 0.0);
    epi_status status = epi_window(&params, &m1, &m2, win_n, win_a,
                                   ladder.data(), ladder.size(), win_horizon,
                                   win_replicas, win_seed, win_jobs,
                                   win_out.c_str(), disc.data());
    if (status == EPI_OK) {
      for (std::size_t i = 0; i < ladder.size(); ++i) {
        std::printf("C=%d mean_discrepancy=%g\n", ladder[i], disc[i]);
      }
    }
    return finish(status);
  }

  return 0;
}
