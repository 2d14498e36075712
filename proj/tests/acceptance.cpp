// Acceptance suite: one test case per criterion, each printing a
// [PASS]/[FAIL] line with its runtime. Tolerances are pinned here, in code.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>

#include "coupling.hpp"
#include "harness.hpp"
#include "io.hpp"
#include "oracles.hpp"
#include "parallel.hpp"
#include "pde.hpp"
#include "rng.hpp"

using namespace episim;

namespace {

class CriterionTimer {
 public:
  explicit CriterionTimer(std::string label) : label_(std::move(label)) {}

  void finish(bool pass, const std::string& detail) {
    double seconds = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start_)
                         .count();
    std::printf("[%s] %s — %s (%.1f s)\n", pass ? "PASS" : "FAIL",
                label_.c_str(), detail.c_str(), seconds);
    std::fflush(stdout);
    CHECK_MESSAGE(pass, label_, ": ", detail);
  }

 private:
  std::string label_;
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

ModelParams irp_inf(double lambda, double beta, double phi) {
  ModelParams p;
  p.lambda = lambda;
  p.beta = beta;
  p.phi = phi;
  p.recovery = RecoveryMode::Individual;
  return p;
}

TildeParams acceptance_tilde() {
  TildeParams p;
  p.alpha1 = 0.5;
  p.alpha2 = 0.5;
  p.kappa_death = 0.5;
  p.phi = 0.5;
  p.lambda = 0.5;
  p.beta = 0.5;
  return p;
}

ConvergenceSettings criterion9_settings() {
  ConvergenceSettings s;
  s.m1 = [](double theta) {
    return 2.0 + 0.5 * std::cos(2.0 * std::numbers::pi * theta);
  };
  s.m2 = [](double theta) {
    return 1.0 + 0.5 * std::sin(2.0 * std::numbers::pi * theta);
  };
  s.params = acceptance_tilde();
  s.torus_sizes = {32, 64, 128};
  s.replicas = 50;
  s.times = {0.1};
  s.observables = standard_observables();
  s.master_seed = 6;
  return s;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("criterion 1: monotone coupling has zero ordering violations") {
  CriterionTimer timer("criterion 1: monotone coupling");
  const std::uint64_t replicas = 200;
  std::vector<std::uint64_t> violations(replicas, 0);
  std::vector<std::uint64_t> events(replicas, 0);

  CoupledPair pair;
  pair.params_a = irp_inf(0.5, 0.5, 2.0);
  pair.params_b = irp_inf(0.5, 0.5, 1.0);
  pair.config_a = ClusterConfig::single_seed(1);
  pair.config_b = ClusterConfig::single_seed(1);
  pair.ordered = true;

  parallel_for(replicas, 0, [&](std::size_t rep) {
    CoupledSimulateOptions options;
    options.horizon = 50.0;
    options.seed = derive_seed(101, rep + 1);
    options.event_budget = 200000;  // supercritical pair: budget-truncated
    CoupledTrajectory trajectory = coupled_simulate(pair, options);
    OrderingCheckResult check = ordering_check(trajectory,
                                               DominationKind::Counts);
    violations[rep] = check.ok ? 0 : 1;
    events[rep] = trajectory.events.size();
  });
  std::uint64_t total_violations = 0, total_events = 0;
  for (std::size_t i = 0; i < replicas; ++i) {
    total_violations += violations[i];
    total_events += events[i];
  }
  timer.finish(total_violations == 0 && total_events > 1000000,
               "violations=" + std::to_string(total_violations) +
                   " events_checked=" + std::to_string(total_events));
}

TEST_CASE("criterion 2: occupancy domination over the contact process") {
  CriterionTimer timer("criterion 2: contact-process domination");
  const std::uint64_t replicas = 100;
  std::vector<std::uint64_t> violations(replicas, 0);
  std::vector<std::uint64_t> events(replicas, 0);
  ModelParams model = irp_inf(1.0, 0.0, 3.0);

  parallel_for(replicas, 0, [&](std::size_t rep) {
    CoupledSimulateOptions options;
    options.horizon = 50.0;
    options.seed = derive_seed(202, rep + 1);
    options.event_budget = 200000;
    CoupledTrajectory trajectory =
        dominate_contact(model, ClusterConfig::single_seed(1), options);
    OrderingCheckResult check =
        ordering_check(trajectory, DominationKind::Occupancy);
    violations[rep] = check.ok ? 0 : 1;
    events[rep] = trajectory.events.size();
  });
  std::uint64_t total_violations = 0, total_events = 0;
  for (std::size_t i = 0; i < replicas; ++i) {
    total_violations += violations[i];
    total_events += events[i];
  }
  timer.finish(total_violations == 0 && total_events > 500000,
               "violations=" + std::to_string(total_violations) +
                   " events_checked=" + std::to_string(total_events));
}

TEST_CASE("criterion 3: extinction in the phi + 2 d lambda < 1 regime") {
  CriterionTimer timer("criterion 3: subcritical extinction regime");
  bool pass = true;
  std::string detail;
  for (RecoveryMode mode : {RecoveryMode::Individual, RecoveryMode::Cluster}) {
    ModelParams p = irp_inf(0.3, 0.2, 0.3);
    p.recovery = mode;
    SurvivalEstimate estimate = survival_probability(
        p, ClusterConfig::single_seed(1), 200.0, 2000, 303);
    pass = pass && estimate.p_hat <= 0.01;
    detail += std::string(mode == RecoveryMode::Individual ? "irp" : "crp") +
              "_p_hat=" + format_double(estimate.p_hat) + " ";
  }
  timer.finish(pass, detail);
}

TEST_CASE("criterion 4: single-cluster birth-death survival oracle") {
  CriterionTimer timer("criterion 4: single-cluster oracle");
  // independent oracle: absorption solve on counts <= 200
  const double extinction = oracles::birth_death_extinction(2.0, 200);
  const double survival_expected = 1.0 - extinction;
  REQUIRE(std::fabs(survival_expected - 0.5) < 1e-9);

  ModelParams p = irp_inf(0.0, 0.0, 2.0);
  SurvivalEstimate estimate = survival_probability(
      p, ClusterConfig::single_seed(1), 200.0, 5000, 404);
  const double error = std::fabs(estimate.p_hat - survival_expected);
  timer.finish(error <= 0.03,
               "p_hat=" + format_double(estimate.p_hat) +
                   " oracle=" + format_double(survival_expected) +
                   " |diff|=" + format_double(error));
}

TEST_CASE("criterion 5: tilde closed forms against 1e6-sample Monte Carlo") {
  CriterionTimer timer("criterion 5: tilde closed forms");
  TildeParams p;
  p.alpha1 = 1.0;
  p.alpha2 = 1.0;
  p.kappa_death = 1.0;
  p.phi = 1.0;
  p.lambda = 1.0;
  p.beta = 0.5;

  // the anchored exact value
  bool pass = tilde_rates(1.0, 1.0, p).delta1 == 9.0 * p.kappa_death;

  const double grid[3] = {0.5, 1.0, 2.0};
  double max_z = 0.0;
  std::uint64_t point = 0;
  for (double a : grid) {
    for (double b : grid) {
      TildeRates closed = tilde_rates(a, b, p);
      TildeMcTable mc =
          tilde_rates_mc(a, b, p, 1000000, derive_seed(507, ++point));
      const double closed_v[5] = {closed.beta1, closed.delta1, closed.beta2,
                                  closed.delta2, closed.g};
      const McEstimate* est[5] = {&mc.beta1, &mc.delta1, &mc.beta2, &mc.delta2,
                                  &mc.g};
      for (int k = 0; k < 5; ++k) {
        double z = std::fabs(closed_v[k] - est[k]->mean) / est[k]->stderr_;
        max_z = std::max(max_z, z);
      }
    }
  }
  pass = pass && max_z <= 3.0;
  timer.finish(pass, "max_z=" + format_double(max_z) +
                         " delta1(1,1)=" +
                         format_double(tilde_rates(1.0, 1.0, p).delta1));
}

TEST_CASE("criterion 6: substitution identities within 3 standard errors") {
  CriterionTimer timer("criterion 6: substitution identities");
  double max_z = 0.0;
  for (auto [a, b] : {std::pair{1.0, 1.0}, std::pair{2.0, 0.5}}) {
    for (const auto& residual : substitution_check(a, b, 1000000, 603)) {
      max_z = std::max(max_z, residual.zscore);
    }
  }
  timer.finish(max_z <= 3.0, "max_z=" + format_double(max_z));
}

TEST_CASE("criterion 7: PDE Fourier decay, mass balance, convergence order") {
  CriterionTimer timer("criterion 7: PDE verification");
  // (a) half-Laplacian heat decay at rate 2 pi^2
  const std::size_t m = 256;
  const double t_end = 0.1;
  PdeConfig config;
  config.reaction_enabled = false;
  TildeParams no_reaction;
  Profile init = Profile::from_function(m, [](double theta) {
    return 2.0 + std::cos(2.0 * std::numbers::pi * theta);
  });
  PdeReport heat = pde_solve(init, Profile::constant(m, 1.0), no_reaction,
                             t_end, config, {t_end});
  const double decay =
      std::exp(-2.0 * std::numbers::pi * std::numbers::pi * t_end);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double theta = static_cast<double>(i) / static_cast<double>(m);
    double exact = 2.0 + decay * std::cos(2.0 * std::numbers::pi * theta);
    num += (heat.outputs.back().lambda1[i] - exact) *
           (heat.outputs.back().lambda1[i] - exact);
    den += exact * exact;
  }
  const double l2_error = std::sqrt(num / den);

  // (b) mass-balance residual on the full nonlinear system
  auto m1 = [](double theta) {
    return 2.0 + 0.5 * std::cos(2.0 * std::numbers::pi * theta);
  };
  auto m2 = [](double theta) {
    return 1.0 + 0.5 * std::sin(2.0 * std::numbers::pi * theta);
  };
  PdeConfig full;
  PdeReport nonlinear = pde_solve_fn(m1, m2, m, acceptance_tilde(), t_end,
                                     full, {t_end});

  // (c) observed order from three nested grids
  RefinementReport refinement =
      pde_refinement_check(m1, m2, 64, acceptance_tilde(), t_end, full);

  bool pass = l2_error < 1e-3 && nonlinear.max_mass_residual < 1e-8 &&
              refinement.observed_order >= 1.8 &&
              refinement.observed_order <= 2.2 && nonlinear.clip_count == 0;
  timer.finish(pass, "l2_error=" + format_double(l2_error) +
                         " mass_residual=" +
                         format_double(nonlinear.max_mass_residual) +
                         " order=" + format_double(refinement.observed_order));
}

TEST_CASE("criterion 8: diffusion-only conservation over 1e6+ events") {
  CriterionTimer timer("criterion 8: exact conservation");
  const std::int32_t n = 64;
  TwoSpeciesParams params;
  params.N = n;
  params.rates.recovery_rate = 0.0;  // diffusion only
  Profile m1 = Profile::constant(n, 5.0);
  Profile m2 = Profile::constant(n, 3.0);
  TwoSpeciesConfig config0 = TwoSpeciesConfig::poisson_init(m1, m2, 808);
  const std::int64_t eta0 = config0.total_eta();
  const std::int64_t xi0 = config0.total_xi();

  TsSimOptions options;
  options.horizon = 0.7;  // ~ N^2 * total * t = 4096 * 512 * 0.7 events
  options.seed = 809;
  options.snapshot_times = {0.0, 0.35, 0.7};
  TsTrajectory trajectory = simulate_torus(config0, params, options);

  bool pass = trajectory.event_count >= 1000000;
  for (const auto& snap : trajectory.snapshots) {
    pass = pass && snap.config.total_eta() == eta0 &&
           snap.config.total_xi() == xi0;
  }
  pass = pass && trajectory.final_config.total_eta() == eta0 &&
         trajectory.final_config.total_xi() == xi0;
  timer.finish(pass, "events=" + std::to_string(trajectory.event_count) +
                         " eta_total=" + std::to_string(eta0) +
                         " xi_total=" + std::to_string(xi0));
}

TEST_CASE("criterion 9: hydrodynamic convergence across the N ladder") {
  CriterionTimer timer("criterion 9: hydrodynamic convergence");
  ConvergenceSettings settings = criterion9_settings();
  ConvergenceReport report = convergence_experiment(settings);

  bool pass = true;
  std::string detail;
  double worst_128 = 0.0;
  for (const auto& cell : report.cells) {
    if (cell.N != 128) continue;
    worst_128 = std::max(worst_128, cell.abs_error);
    bool cap_ok = cell.abs_error <= std::max(0.05, 3.0 * cell.stderr_);
    bool monotone = false;
    for (const auto& other : report.cells) {
      if (other.N == 32 && other.observable == cell.observable &&
          other.species == cell.species) {
        monotone = cell.abs_error < other.abs_error;
      }
    }
    if (!cap_ok || !monotone) {
      pass = false;
      detail += cell.observable + "/" + (cell.species == 0 ? "eta" : "xi") +
                (cap_ok ? " not-monotone; " : " over-cap; ");
    }
  }
  timer.finish(pass, detail.empty()
                         ? "all 6 cells monotone, max_error_128=" +
                               format_double(worst_128)
                         : detail);
}

TEST_CASE("criterion 10: window discrepancy decays in the torus size") {
  CriterionTimer timer("criterion 10: window insensitivity");
  WindowSettings s;
  s.m1 = [](double theta) {
    return 2.0 + 0.5 * std::cos(2.0 * std::numbers::pi * theta);
  };
  s.m2 = [](double theta) {
    return 1.0 + 0.5 * std::sin(2.0 * std::numbers::pi * theta);
  };
  s.params = acceptance_tilde();
  s.N = 16;
  s.A = 1;
  s.c_ladder = {2, 4, 8};
  s.horizon = 0.05;
  s.replicas = 20;
  s.master_seed = 1010;
  WindowReport report = window_experiment(s);
  REQUIRE(report.cells.size() == 3);
  const double d2 = report.cells[0].mean_discrepancy;
  const double d4 = report.cells[1].mean_discrepancy;
  const double d8 = report.cells[2].mean_discrepancy;
  bool pass = d4 <= d2 + 1e-12 && d8 <= d4 + 1e-12 && d8 <= 0.5 * d2 + 1e-12;
  timer.finish(pass, "disc(C=2)=" + format_double(d2) +
                         " disc(C=4)=" + format_double(d4) +
                         " disc(C=8)=" + format_double(d8));
}

TEST_CASE("criterion 11: byte-identical CSV under a fixed master seed") {
  CriterionTimer timer("criterion 11: reproducibility");
  ConvergenceSettings settings = criterion9_settings();
  settings.torus_sizes = {32};  // the smallest cell of criterion 9

  auto dir = std::filesystem::temp_directory_path() / "episim_acceptance_11";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  settings.jobs = 1;
  ConvergenceReport first = convergence_experiment(settings);
  write_convergence_csv(dir / "a.csv", first);
  settings.jobs = 2;  // scheduling must not affect the bytes
  ConvergenceReport second = convergence_experiment(settings);
  write_convergence_csv(dir / "b.csv", second);

  std::string a = read_file(dir / "a.csv");
  std::string b = read_file(dir / "b.csv");
  bool pass = !a.empty() && a == b;
  std::filesystem::remove_all(dir);
  timer.finish(pass, pass ? "identical output (" +
                                std::to_string(a.size()) + " bytes)"
                          : "outputs differ");
}
