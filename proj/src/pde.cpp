#include "pde.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace episim {

std::pair<double, double> reaction_term(double a, double b,
                                        const TildeParams& params) {
  TildeRates r = tilde_rates(a, b, params);
  return {r.beta1 - r.delta1 + r.g, r.beta2 - r.delta2 - r.g};
}

namespace {

struct Rhs {
  std::vector<double> d1, d2;          // full right-hand side
  double reaction_mean1 = 0.0;         // reaction part only, grid mean
  double reaction_mean2 = 0.0;
};

// Stage values may undershoot zero by rounding; the reaction is evaluated at
// the clamped state, which keeps the tilde forms in their domain.
Rhs evaluate_rhs(const std::vector<double>& u1, const std::vector<double>& u2,
                 const TildeParams& params, const PdeConfig& config,
                 double inv_dx2) {
  const std::size_t m = u1.size();
  Rhs out;
  out.d1.assign(m, 0.0);
  out.d2.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double lap1 = 0.0, lap2 = 0.0;
    if (config.diffusion_enabled) {
      const std::size_t l = (i + m - 1) % m;
      const std::size_t r = (i + 1) % m;
      lap1 = 0.5 * (u1[l] - 2.0 * u1[i] + u1[r]) * inv_dx2;
      lap2 = 0.5 * (u2[l] - 2.0 * u2[i] + u2[r]) * inv_dx2;
    }
    double f1 = 0.0, f2 = 0.0;
    if (config.reaction_enabled) {
      auto [r1, r2] = reaction_term(std::max(u1[i], 0.0), std::max(u2[i], 0.0),
                                    params);
      f1 = r1;
      f2 = r2;
    }
    out.d1[i] = lap1 + f1;
    out.d2[i] = lap2 + f2;
    out.reaction_mean1 += f1;
    out.reaction_mean2 += f2;
  }
  out.reaction_mean1 /= static_cast<double>(m);
  out.reaction_mean2 /= static_cast<double>(m);
  return out;
}

double grid_mean(const std::vector<double>& u) {
  double sum = 0.0;
  for (double v : u) sum += v;
  return sum / static_cast<double>(u.size());
}

}  // namespace

PdeStepStats pde_step(PdeState& state, const TildeParams& params,
                      const PdeConfig& config, double dt) {
  const std::size_t m = state.grid();
  require(m >= 3, ErrorCode::InvalidArgument, "grid too small");
  require(state.lambda2.size() == m, ErrorCode::InvalidArgument,
          "species grids must match");
  const double dx = state.dx();
  require(dt > 0.0, ErrorCode::InvalidArgument, "dt must be > 0");
  if (config.diffusion_enabled) {
    require(dt <= config.cfl_safety * dx * dx + 1e-18,
            ErrorCode::CflViolation,
            "CFL_VIOLATION: dt exceeds cfl_safety * dx^2");
  }
  const double inv_dx2 = 1.0 / (dx * dx);

  const double mean1_before = grid_mean(state.lambda1);
  const double mean2_before = grid_mean(state.lambda2);

  auto shifted = [&](const std::vector<double>& u, const std::vector<double>& k,
                     double h) {
    std::vector<double> v(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) v[i] = u[i] + h * k[i];
    return v;
  };

  Rhs k1 = evaluate_rhs(state.lambda1, state.lambda2, params, config, inv_dx2);
  Rhs k2 = evaluate_rhs(shifted(state.lambda1, k1.d1, 0.5 * dt),
                        shifted(state.lambda2, k1.d2, 0.5 * dt), params,
                        config, inv_dx2);
  Rhs k3 = evaluate_rhs(shifted(state.lambda1, k2.d1, 0.5 * dt),
                        shifted(state.lambda2, k2.d2, 0.5 * dt), params,
                        config, inv_dx2);
  Rhs k4 = evaluate_rhs(shifted(state.lambda1, k3.d1, dt),
                        shifted(state.lambda2, k3.d2, dt), params, config,
                        inv_dx2);

  PdeStepStats stats;
  for (std::size_t i = 0; i < m; ++i) {
    state.lambda1[i] += dt / 6.0 *
                        (k1.d1[i] + 2.0 * k2.d1[i] + 2.0 * k3.d1[i] + k4.d1[i]);
    state.lambda2[i] += dt / 6.0 *
                        (k1.d2[i] + 2.0 * k2.d2[i] + 2.0 * k3.d2[i] + k4.d2[i]);
  }

  // Discrete mass balance: the periodic Laplacian sums to zero, so the mean
  // must move by exactly the RK4-weighted reaction means (up to roundoff).
  const double expected1 =
      dt / 6.0 * (k1.reaction_mean1 + 2.0 * k2.reaction_mean1 +
                  2.0 * k3.reaction_mean1 + k4.reaction_mean1);
  const double expected2 =
      dt / 6.0 * (k1.reaction_mean2 + 2.0 * k2.reaction_mean2 +
                  2.0 * k3.reaction_mean2 + k4.reaction_mean2);
  const double mean1_after = grid_mean(state.lambda1);
  const double mean2_after = grid_mean(state.lambda2);
  const double res1 = std::fabs(mean1_after - mean1_before - expected1) /
                      std::max(1.0, std::fabs(mean1_after));
  const double res2 = std::fabs(mean2_after - mean2_before - expected2) /
                      std::max(1.0, std::fabs(mean2_after));
  stats.mass_residual = std::max(res1, res2);

  for (std::size_t i = 0; i < m; ++i) {
    if (state.lambda1[i] < 0.0) {
      stats.clipped_mass += -state.lambda1[i] * dx;
      state.lambda1[i] = 0.0;
      ++stats.clipped;
    }
    if (state.lambda2[i] < 0.0) {
      stats.clipped_mass += -state.lambda2[i] * dx;
      state.lambda2[i] = 0.0;
      ++stats.clipped;
    }
  }
  state.t += dt;
  return stats;
}

PdeReport pde_solve(const Profile& m1, const Profile& m2,
                    const TildeParams& params, double horizon,
                    const PdeConfig& config,
                    const std::vector<double>& output_times) {
  params.validate();
  require(m1.size() == m2.size() && m1.size() >= 3, ErrorCode::InvalidArgument,
          "profiles must share a grid of size >= 3");
  require(horizon >= 0.0, ErrorCode::InvalidArgument, "horizon must be >= 0");
  require(std::is_sorted(output_times.begin(), output_times.end()),
          ErrorCode::InvalidArgument, "output times must be ascending");
  for (double t : output_times) {
    require(t >= 0.0 && t <= horizon + 1e-12, ErrorCode::InvalidArgument,
            "output times must lie in [0, horizon]");
  }

  PdeState state;
  state.lambda1 = m1.values;
  state.lambda2 = m2.values;
  state.t = 0.0;

  const double dx = state.dx();
  double dt_base = config.dt > 0.0 ? config.dt : config.cfl_safety * dx * dx;

  PdeReport report;
  report.min_value = std::min(
      *std::min_element(state.lambda1.begin(), state.lambda1.end()),
      *std::min_element(state.lambda2.begin(), state.lambda2.end()));

  std::size_t next_output = 0;
  auto emit_due = [&]() {
    while (next_output < output_times.size() &&
           output_times[next_output] <= state.t + 1e-12) {
      report.outputs.push_back(state);
      report.outputs.back().t = output_times[next_output];
      ++next_output;
    }
  };
  emit_due();

  while (state.t < horizon - 1e-12) {
    double dt = std::min(dt_base, horizon - state.t);
    if (next_output < output_times.size()) {
      dt = std::min(dt, output_times[next_output] - state.t);
    }
    if (dt <= 0.0) dt = dt_base;
    PdeStepStats stats = pde_step(state, params, config, dt);
    ++report.steps;
    report.clip_count += stats.clipped;
    report.clipped_mass += stats.clipped_mass;
    report.max_mass_residual = std::max(report.max_mass_residual,
                                        stats.mass_residual);
    double step_min = std::min(
        *std::min_element(state.lambda1.begin(), state.lambda1.end()),
        *std::min_element(state.lambda2.begin(), state.lambda2.end()));
    report.min_value = std::min(report.min_value, step_min);
    emit_due();
  }
  emit_due();
  report.below_positivity_floor = report.min_value < 1e-6;
  return report;
}

PdeReport pde_solve_fn(const std::function<double(double)>& m1,
                       const std::function<double(double)>& m2,
                       std::size_t grid, const TildeParams& params,
                       double horizon, const PdeConfig& config,
                       const std::vector<double>& output_times) {
  return pde_solve(Profile::from_function(grid, m1),
                   Profile::from_function(grid, m2), params, horizon, config,
                   output_times);
}

double torus_integral(const std::vector<double>& g,
                      const std::vector<double>& values) {
  require(g.size() == values.size() && !g.empty(), ErrorCode::InvalidArgument,
          "integrand grids must match");
  double sum = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) sum += g[i] * values[i];
  return sum / static_cast<double>(g.size());
}

RefinementReport pde_refinement_check(const std::function<double(double)>& m1,
                                      const std::function<double(double)>& m2,
                                      std::size_t coarse_grid,
                                      const TildeParams& params, double horizon,
                                      const PdeConfig& config) {
  RefinementReport out;
  const std::vector<double> at_end = {horizon};
  PdeReport coarse = pde_solve_fn(m1, m2, coarse_grid, params, horizon, config,
                                  at_end);
  PdeReport fine = pde_solve_fn(m1, m2, 2 * coarse_grid, params, horizon,
                                config, at_end);
  PdeReport finest = pde_solve_fn(m1, m2, 4 * coarse_grid, params, horizon,
                                  config, at_end);

  const PdeState& uc = coarse.outputs.back();
  const PdeState& uf = fine.outputs.back();
  const PdeState& ug = finest.outputs.back();

  out.coarse_mean[0] = grid_mean(uc.lambda1);
  out.coarse_mean[1] = grid_mean(uc.lambda2);
  out.fine_mean[0] = grid_mean(uf.lambda1);
  out.fine_mean[1] = grid_mean(uf.lambda2);
  out.delta[0] = std::fabs(out.fine_mean[0] - out.coarse_mean[0]);
  out.delta[1] = std::fabs(out.fine_mean[1] - out.coarse_mean[1]);

  // Differences at shared points between nested grids, L2 over both species.
  auto nested_error = [](const PdeState& coarse_state, const PdeState& fine_state) {
    const std::size_t mc = coarse_state.grid();
    double ss = 0.0;
    for (std::size_t i = 0; i < mc; ++i) {
      double d1 = coarse_state.lambda1[i] - fine_state.lambda1[2 * i];
      double d2 = coarse_state.lambda2[i] - fine_state.lambda2[2 * i];
      ss += d1 * d1 + d2 * d2;
    }
    return std::sqrt(ss / static_cast<double>(mc));
  };
  double e_coarse = nested_error(uc, uf);
  double e_fine = nested_error(uf, ug);
  out.observed_order = std::log2(e_coarse / e_fine);
  return out;
}

}  // namespace episim
