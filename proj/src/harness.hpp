#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "cluster_model.hpp"
#include "coupling.hpp"
#include "pde.hpp"
#include "two_species.hpp"

namespace episim {

struct ObservableSpec {
  std::string id;
  std::function<double(double)> g;
};

// The standard test battery {1, cos 2 pi theta, sin 2 pi theta}.
std::vector<ObservableSpec> standard_observables();

// ---------------------------------------------------------------------------
// Hydrodynamic-limit convergence experiment: empirical pairings of the
// two-species process against the PDE solution across a ladder of N.

struct ConvergenceSettings {
  std::function<double(double)> m1;
  std::function<double(double)> m2;
  TildeParams params;
  std::vector<std::int32_t> torus_sizes;
  std::uint64_t replicas = 50;
  std::vector<double> times;
  std::vector<ObservableSpec> observables;
  std::uint64_t master_seed = 1;
  int jobs = 0;
  std::size_t pde_grid = 256;
  std::uint64_t event_budget = 4'000'000'000ULL;
};

struct ConvergenceCell {
  std::int32_t N = 0;
  double time = 0.0;
  std::string observable;
  int species = 0;  // 0: eta (healthy), 1: xi (infected)
  std::uint64_t replicas = 0;
  double mean = 0.0;
  double target = 0.0;       // integral of G against the PDE density
  double abs_error = 0.0;
  double stderr_ = 0.0;
};

struct ConvergenceReport {
  std::vector<ConvergenceCell> cells;
  double refined_target_shift = 0.0;  // max |target(M) - target(2M)|
  double min_stderr = 0.0;            // smallest positive reported stderr
};

ConvergenceReport convergence_experiment(const ConvergenceSettings& settings);

void write_convergence_csv(const std::filesystem::path& path,
                           const ConvergenceReport& report);

// ---------------------------------------------------------------------------
// Infinite-volume window experiment: the two-species process on tori of
// half-width C*N driven by shared per-site event streams, compared inside
// the window {-A*N, ..., A*N} against the largest-C run.

struct WindowSettings {
  std::function<double(double)> m1;  // profiles on R, theta = x / N
  std::function<double(double)> m2;
  TildeParams params;
  std::int32_t N = 16;
  std::int32_t A = 1;
  std::vector<std::int32_t> c_ladder;  // increasing, A < min(C)
  double horizon = 0.05;
  std::uint64_t replicas = 20;
  std::uint64_t master_seed = 1;
  int jobs = 0;
};

struct WindowCell {
  std::int32_t C = 0;
  std::int64_t torus_sites = 0;
  double mean_discrepancy_eta = 0.0;
  double mean_discrepancy_xi = 0.0;
  double mean_discrepancy = 0.0;  // both species combined
};

struct WindowReport {
  std::vector<WindowCell> cells;
  std::int32_t reference_c = 0;
};

WindowReport window_experiment(const WindowSettings& settings);

void write_window_csv(const std::filesystem::path& path,
                      const WindowSettings& settings,
                      const WindowReport& report);

// ---------------------------------------------------------------------------
// Extinction/epidemic phase scan over a (lambda, phi) grid.

struct PhaseScanSettings {
  ModelParams base;  // beta, kappa_cap, d, recovery taken from here
  std::vector<double> lambdas;
  std::vector<double> phis;
  double horizon = 100.0;
  std::uint64_t replicas = 500;
  std::uint64_t master_seed = 1;
  SurvivalRunOptions run;
};

struct PhaseScanCell {
  double lambda = 0.0;
  double phi = 0.0;
  SurvivalEstimate estimate;
  // Extinction guaranteed by theory: phi + 2 d lambda < 1 at infinite cap,
  // phi + 2 d max(lambda, beta) < 1 at finite cap.
  bool theory_extinct = false;
};

std::vector<PhaseScanCell> phase_scan(const PhaseScanSettings& settings);

void write_phase_csv(const std::filesystem::path& path,
                     const PhaseScanSettings& settings,
                     const std::vector<PhaseScanCell>& cells);

// ---------------------------------------------------------------------------
// Report writers for the remaining module outputs.

void write_survival_csv(const std::filesystem::path& path, double phi,
                        const SurvivalEstimate& estimate);

void write_probes_csv(const std::filesystem::path& path,
                      const PhiSearchResult& result);

void write_trajectory_jsonl(const std::filesystem::path& path,
                            const Trajectory& trajectory, int d);

void write_couple_report_json(const std::filesystem::path& path,
                              const CoupledTrajectory& trajectory,
                              const OrderingCheckResult& check,
                              std::uint64_t replicas,
                              std::uint64_t total_violations,
                              std::uint64_t total_events);

// Paired event log, one JSON object per state-changing event.
void write_coupled_events_jsonl(const std::filesystem::path& path,
                                const CoupledTrajectory& trajectory, int d);

void write_tilde_table_csv(const std::filesystem::path& path,
                           const TildeParams& params,
                           const std::vector<double>& grid,
                           std::uint64_t mc_samples, std::uint64_t seed);

void write_pde_csv(const std::filesystem::path& path, const PdeReport& report);

void write_two_species_snapshots_csv(const std::filesystem::path& path,
                                     const TsTrajectory& trajectory);

void write_pairings_csv(const std::filesystem::path& path,
                        const TsTrajectory& trajectory,
                        const std::vector<ObservableSpec>& observables,
                        std::uint64_t replica);

}  // namespace episim
