#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "poisson_measures.hpp"

namespace episim {

// State of the reaction-diffusion system d/dt lambda = 1/2 Lap lambda + F
// on the periodic grid theta_i = i / M.
struct PdeState {
  std::vector<double> lambda1;
  std::vector<double> lambda2;
  double t = 0.0;

  std::size_t grid() const { return lambda1.size(); }
  double dx() const { return 1.0 / static_cast<double>(lambda1.size()); }
};

struct PdeConfig {
  double cfl_safety = 0.4;  // dt <= cfl_safety * dx^2
  double dt = 0.0;          // 0: derive from cfl_safety
  bool diffusion_enabled = true;  // test hooks
  bool reaction_enabled = true;
};

// Right-hand-side reaction pair (F1, F2) = (b1 - d1 + g, b2 - d2 - g) from
// the tilde closed forms.
std::pair<double, double> reaction_term(double a, double b,
                                        const TildeParams& params);

struct PdeStepStats {
  std::int64_t clipped = 0;        // entries clipped to zero after the update
  double clipped_mass = 0.0;       // total negative mass removed by clipping
  double mass_residual = 0.0;      // max over species, relative per step
};

// One RK4 step of size dt; dt must satisfy the CFL bound.
PdeStepStats pde_step(PdeState& state, const TildeParams& params,
                      const PdeConfig& config, double dt);

struct PdeReport {
  std::vector<PdeState> outputs;   // one per requested output time
  std::uint64_t steps = 0;
  std::int64_t clip_count = 0;
  double clipped_mass = 0.0;
  double max_mass_residual = 0.0;
  double min_value = 0.0;          // over both species and all steps
  bool below_positivity_floor = false;  // min_value < 1e-6 at some step
};

PdeReport pde_solve(const Profile& m1, const Profile& m2,
                    const TildeParams& params, double horizon,
                    const PdeConfig& config,
                    const std::vector<double>& output_times);

// Convenience entry: evaluates the initial profiles on an M-point grid.
PdeReport pde_solve_fn(const std::function<double(double)>& m1,
                       const std::function<double(double)>& m2,
                       std::size_t grid, const TildeParams& params,
                       double horizon, const PdeConfig& config,
                       const std::vector<double>& output_times);

// Midpoint quadrature of G against a grid function on the torus.
double torus_integral(const std::vector<double>& g,
                      const std::vector<double>& values);

// Grid-refinement diagnostics: change of <lambda_i(T, .), 1> when the grid
// (and with it dt) is halved, plus the observed convergence order from three
// nested grids compared at the shared points.
struct RefinementReport {
  double coarse_mean[2] = {0.0, 0.0};
  double fine_mean[2] = {0.0, 0.0};
  double delta[2] = {0.0, 0.0};
  double observed_order = 0.0;
};
RefinementReport pde_refinement_check(const std::function<double(double)>& m1,
                                      const std::function<double(double)>& m2,
                                      std::size_t coarse_grid,
                                      const TildeParams& params, double horizon,
                                      const PdeConfig& config);

}  // namespace episim
