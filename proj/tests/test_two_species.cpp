#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "errors.hpp"
#include "rng.hpp"
#include "stats.hpp"
#include "two_species.hpp"

using namespace episim;

namespace {

TwoSpeciesParams make_params(std::int32_t n) {
  TwoSpeciesParams p;
  p.N = n;
  return p;
}

double rate_of(const std::vector<TsEvent>& events, TsEventKind kind) {
  for (const auto& e : events) {
    if (e.kind == kind) return e.rate;
  }
  return -1.0;
}

}  // namespace

TEST_CASE("reaction rates: births, deaths, recovery at a mixed site") {
  TwoSpeciesParams p = make_params(8);
  p.rates.alpha1 = 1.0;
  p.rates.alpha2 = 0.5;
  p.rates.kappa_death = 1.0;
  TwoSpeciesConfig config = TwoSpeciesConfig::zeros(8);
  config.eta[3] = 2;
  config.xi[3] = 1;
  auto events = reaction_rates(config, 3, p);
  CHECK(rate_of(events, TsEventKind::Birth1) == doctest::Approx(3.0));
  CHECK(rate_of(events, TsEventKind::Birth2) == doctest::Approx(1.5));
  // delta1 = eta^2 (eta + xi^2) = 4 * 3;  delta2 = xi^2 (eta^2 + xi) = 1 * 5
  CHECK(rate_of(events, TsEventKind::Death1) == doctest::Approx(12.0));
  CHECK(rate_of(events, TsEventKind::Death2) == doctest::Approx(5.0));
  CHECK(rate_of(events, TsEventKind::Recovery) == doctest::Approx(1.0));
}

TEST_CASE("reaction rates: infection terms gated by eta > 0") {
  TwoSpeciesParams p = make_params(8);
  p.rates.phi = 2.0;
  p.rates.lambda = 0.7;
  p.rates.beta = 0.4;
  TwoSpeciesConfig config = TwoSpeciesConfig::zeros(8);
  config.xi[2] = 3;  // neighbor pressure S = 3 at site 3
  config.xi[3] = 2;
  config.eta[3] = 0;
  auto gated = reaction_rates(config, 3, p);
  CHECK(rate_of(gated, TsEventKind::WithinInfect) == -1.0);
  CHECK(rate_of(gated, TsEventKind::OutsideNew) == -1.0);
  CHECK(rate_of(gated, TsEventKind::OutsideMore) == -1.0);

  config.eta[3] = 1;
  auto open = reaction_rates(config, 3, p);
  CHECK(rate_of(open, TsEventKind::WithinInfect) == doctest::Approx(4.0));
  CHECK(rate_of(open, TsEventKind::OutsideMore) == doctest::Approx(0.4 * 3.0));
  CHECK(rate_of(open, TsEventKind::OutsideNew) == -1.0);

  config.xi[3] = 0;
  auto fresh = reaction_rates(config, 3, p);
  CHECK(rate_of(fresh, TsEventKind::OutsideNew) == doctest::Approx(0.7 * 3.0));
  CHECK(rate_of(fresh, TsEventKind::OutsideMore) == -1.0);
}

TEST_CASE("reaction rates are nonnegative and deaths vanish at zero counts") {
  TwoSpeciesParams p = make_params(6);
  p.rates.alpha1 = 0.5;
  p.rates.alpha2 = 0.5;
  p.rates.kappa_death = 0.5;
  p.rates.phi = 0.5;
  p.rates.lambda = 0.5;
  p.rates.beta = 0.5;
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    TwoSpeciesConfig config = TwoSpeciesConfig::zeros(6);
    for (std::size_t x = 0; x < 6; ++x) {
      config.eta[x] = static_cast<std::int64_t>(rng.poisson(1.5));
      config.xi[x] = static_cast<std::int64_t>(rng.poisson(1.0));
    }
    for (std::size_t x = 0; x < 6; ++x) {
      for (const auto& e : reaction_rates(config, x, p)) {
        CHECK(e.rate >= 0.0);
      }
      if (config.eta[x] == 0) {
        CHECK(rate_of(reaction_rates(config, x, p), TsEventKind::Death1) ==
              -1.0);
      }
      if (config.xi[x] == 0) {
        CHECK(rate_of(reaction_rates(config, x, p), TsEventKind::Death2) ==
              -1.0);
      }
    }
  }
}

TEST_CASE("diffusion rates: N^2/2 per particle per direction") {
  TwoSpeciesParams p = make_params(10);
  TwoSpeciesConfig config = TwoSpeciesConfig::zeros(10);
  config.eta[4] = 3;
  auto events = diffusion_rates(config, 4, p);
  REQUIRE(events.size() == 2);
  CHECK(rate_of(events, TsEventKind::JumpEtaLeft) == doctest::Approx(150.0));
  CHECK(rate_of(events, TsEventKind::JumpEtaRight) == doctest::Approx(150.0));
  CHECK(diffusion_rates(config, 5, p).empty());
}

TEST_CASE("diffusion-only runs conserve both species totals exactly") {
  const std::int32_t n = 32;
  TwoSpeciesParams p = make_params(n);
  p.rates.recovery_rate = 0.0;
  Profile m1 = Profile::constant(n, 3.0);
  Profile m2 = Profile::constant(n, 2.0);
  TwoSpeciesConfig config0 = TwoSpeciesConfig::poisson_init(m1, m2, 313);
  const std::int64_t eta0 = config0.total_eta();
  const std::int64_t xi0 = config0.total_xi();

  TsSimOptions options;
  options.horizon = 1.0;
  options.seed = 4;
  options.snapshot_times = {0.0, 0.25, 0.5, 1.0};
  TsTrajectory trajectory = simulate_torus(config0, p, options);
  CHECK(trajectory.event_count > 100000);
  for (const auto& snap : trajectory.snapshots) {
    CHECK(snap.config.total_eta() == eta0);
    CHECK(snap.config.total_xi() == xi0);
  }
}

TEST_CASE("snapshot at time zero equals the initial configuration") {
  const std::int32_t n = 16;
  TwoSpeciesParams p = make_params(n);
  p.rates.alpha1 = 0.3;
  p.rates.kappa_death = 0.2;
  Profile m = Profile::constant(n, 1.0);
  TwoSpeciesConfig config0 = TwoSpeciesConfig::poisson_init(m, m, 99);
  TsSimOptions options;
  options.horizon = 0.05;
  options.seed = 5;
  options.snapshot_times = {0.0};
  TsTrajectory trajectory = simulate_torus(config0, p, options);
  REQUIRE(!trajectory.snapshots.empty());
  CHECK(trajectory.snapshots[0].config.eta == config0.eta);
  CHECK(trajectory.snapshots[0].config.xi == config0.xi);
}

TEST_CASE("single particle jump count is Poisson(N^2 t)") {
  const std::int32_t n = 8;
  TwoSpeciesParams p = make_params(n);
  p.rates.recovery_rate = 0.0;
  const double horizon = 0.5;
  const double mean = 64.0 * horizon;
  std::vector<double> jumps;
  for (std::uint64_t rep = 0; rep < 300; ++rep) {
    TwoSpeciesConfig config0 = TwoSpeciesConfig::zeros(n);
    config0.eta[0] = 1;
    TsSimOptions options;
    options.horizon = horizon;
    options.seed = derive_seed(606, rep + 1);
    TsTrajectory trajectory = simulate_torus(config0, p, options);
    jumps.push_back(static_cast<double>(trajectory.event_count));
  }
  auto ks = ks_one_sample_discrete(
      jumps, [&](double x) { return poisson_cdf(x, mean); });
  CHECK(ks.p_value > 0.01);
}

TEST_CASE("reaction events move the counts they should") {
  TwoSpeciesParams p = make_params(12);
  p.rates.alpha1 = 0.5;
  p.rates.alpha2 = 0.5;
  p.rates.kappa_death = 0.5;
  p.rates.phi = 0.5;
  p.rates.lambda = 0.5;
  p.rates.beta = 0.5;
  Profile m = Profile::constant(12, 1.5);
  TwoSpeciesConfig config0 = TwoSpeciesConfig::poisson_init(m, m, 21);
  TsSimOptions options;
  options.horizon = 0.2;
  options.seed = 23;
  options.record_events = true;
  options.snapshot_times = {0.0};
  TsTrajectory trajectory = simulate_torus(config0, p, options);

  TwoSpeciesConfig state = config0;
  for (const auto& event : trajectory.events) {
    std::int64_t de = 0, dx = 0;  // site-level deltas
    switch (event.kind) {
      case TsEventKind::Birth1:
        de = +1;
        break;
      case TsEventKind::Death1:
        de = -1;
        break;
      case TsEventKind::Birth2:
        dx = +1;
        break;
      case TsEventKind::Death2:
        dx = -1;
        break;
      case TsEventKind::Recovery:
        de = +1;
        dx = -1;
        break;
      case TsEventKind::WithinInfect:
      case TsEventKind::OutsideNew:
      case TsEventKind::OutsideMore:
        de = -1;
        dx = +1;
        break;
      default: {  // jumps conserve
        std::size_t from = static_cast<std::size_t>(event.site);
        std::size_t to = static_cast<std::size_t>(event.target);
        bool healthy = event.kind == TsEventKind::JumpEtaLeft ||
                       event.kind == TsEventKind::JumpEtaRight;
        if (healthy) {
          state.eta[from] -= 1;
          state.eta[to] += 1;
        } else {
          state.xi[from] -= 1;
          state.xi[to] += 1;
        }
        CHECK(state.eta[from] >= 0);
        CHECK(state.xi[from] >= 0);
        continue;
      }
    }
    std::size_t x = static_cast<std::size_t>(event.site);
    // recovery and infection preserve eta + xi at the site
    if (de != 0 && dx != 0) {
      std::int64_t before = state.eta[x] + state.xi[x];
      state.eta[x] += de;
      state.xi[x] += dx;
      CHECK(state.eta[x] + state.xi[x] == before);
    } else {
      state.eta[x] += de;
      state.xi[x] += dx;
    }
    CHECK(state.eta[x] >= 0);
    CHECK(state.xi[x] >= 0);
  }
  CHECK(state.eta == trajectory.final_config.eta);
  CHECK(state.xi == trajectory.final_config.xi);
}

TEST_CASE("channel totals survive paranoid recomputation") {
  TwoSpeciesParams p = make_params(10);
  p.rates.alpha1 = 0.4;
  p.rates.alpha2 = 0.6;
  p.rates.kappa_death = 0.8;
  p.rates.phi = 1.0;
  p.rates.lambda = 0.5;
  p.rates.beta = 0.25;
  Profile m = Profile::constant(10, 2.0);
  TsSimOptions options;
  options.horizon = 0.05;
  options.seed = 31;
  options.paranoid_checks = true;
  TsTrajectory trajectory = simulate_torus(
      TwoSpeciesConfig::poisson_init(m, m, 32), p, options);
  CHECK(trajectory.event_count > 0);
}

TEST_CASE("event budget truncates the torus run") {
  TwoSpeciesParams p = make_params(16);
  Profile m = Profile::constant(16, 2.0);
  TsSimOptions options;
  options.horizon = 10.0;
  options.seed = 8;
  options.event_budget = 100;
  TsTrajectory trajectory = simulate_torus(
      TwoSpeciesConfig::poisson_init(m, m, 44), p, options);
  CHECK(trajectory.truncated);
  CHECK(trajectory.event_count == 100);
}

TEST_CASE("empirical pairing examples") {
  TwoSpeciesConfig config = TwoSpeciesConfig::zeros(4);
  config.eta = {0, 1, 2, 3};
  Observable identity = Observable::from_function(
      "theta", 4, [](double theta) { return theta; });
  PairingValue pv = empirical_pairing(config, identity);
  CHECK(pv.eta == doctest::Approx(0.875));
  CHECK(pv.xi == doctest::Approx(0.0));

  TwoSpeciesConfig constant = TwoSpeciesConfig::zeros(6);
  for (auto& v : constant.eta) v = 5;
  Observable one = Observable::from_function("one", 6, [](double) { return 1.0; });
  CHECK(empirical_pairing(constant, one).eta == doctest::Approx(5.0));

  TwoSpeciesConfig single = TwoSpeciesConfig::zeros(8);
  single.xi[3] = 1;
  Observable g = Observable::from_function(
      "g", 8, [](double theta) { return 1.0 + theta * theta; });
  CHECK(empirical_pairing(single, g).xi ==
        doctest::Approx((1.0 + (3.0 / 8.0) * (3.0 / 8.0)) / 8.0));
}

TEST_CASE("stationarity of constant product Poisson under diffusion only") {
  const std::int32_t n = 32;
  const double rho = 2.0;
  TwoSpeciesParams p = make_params(n);
  p.rates.recovery_rate = 0.0;
  Profile m = Profile::constant(n, rho);

  std::vector<SampledPair> at_zero, at_t;
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    TwoSpeciesConfig config0 =
        TwoSpeciesConfig::poisson_init(m, m, derive_seed(51, rep));
    at_zero.push_back({config0.eta, config0.xi});
    TsSimOptions options;
    options.horizon = 0.1;
    options.seed = derive_seed(52, rep);
    TsTrajectory trajectory = simulate_torus(config0, p, options);
    at_t.push_back(
        {trajectory.final_config.eta, trajectory.final_config.xi});
  }
  LocalEquilibriumReport kl0 = local_equilibrium_divergence(at_zero, m, m, 3);
  LocalEquilibriumReport klt = local_equilibrium_divergence(at_t, m, m, 3);
  double mean0 = 0.0, meant = 0.0;
  for (std::size_t x = 0; x < static_cast<std::size_t>(n); ++x) {
    mean0 += kl0.kl_eta[x] + kl0.kl_xi[x];
    meant += klt.kl_eta[x] + klt.kl_xi[x];
  }
  mean0 /= 2.0 * n;
  meant /= 2.0 * n;
  // the diagnostic stays at its plug-in bias baseline
  CHECK(meant <= 2.0 * mean0 + 0.005);
}

TEST_CASE("site-stream engine matches the BIT engine in distribution") {
  // same dynamics, two independent exact simulators: compare total infected
  // mass at the horizon across replicas (two-sample KS)
  const std::int32_t n = 9;  // site-stream torus has 2*half+1 sites
  const std::int64_t half = 4;
  TwoSpeciesParams p = make_params(n);
  p.rates.alpha1 = 0.5;
  p.rates.alpha2 = 0.5;
  p.rates.kappa_death = 0.5;
  p.rates.phi = 0.5;
  p.rates.lambda = 0.5;
  p.rates.beta = 0.5;
  const double horizon = 0.15;
  auto m1 = [](double) { return 2.0; };
  auto m2 = [](double) { return 1.0; };

  std::vector<double> bit_totals, stream_totals;
  for (std::uint64_t rep = 0; rep < 400; ++rep) {
    Profile p1 = Profile::constant(n, 2.0);
    Profile p2 = Profile::constant(n, 1.0);
    TsSimOptions options;
    options.horizon = horizon;
    options.seed = derive_seed(61, rep + 1);
    TsTrajectory trajectory = simulate_torus(
        TwoSpeciesConfig::poisson_init(p1, p2, derive_seed(62, rep + 1)), p,
        options);
    bit_totals.push_back(
        static_cast<double>(trajectory.final_config.total_xi()));

    SiteStreamSimulator stream(half, p, m1, m2, 63, rep + 1);
    stream.run_to(horizon);
    std::int64_t total = 0;
    for (std::int64_t x = -half; x <= half; ++x) total += stream.xi_at(x);
    stream_totals.push_back(static_cast<double>(total));
  }
  auto ks = ks_two_sample(bit_totals, stream_totals);
  CHECK(ks.p_value > 0.01);
}

TEST_CASE("site-stream runs with shared streams agree away from the boundary") {
  TwoSpeciesParams p = make_params(8);
  p.rates.alpha1 = 0.5;
  p.rates.kappa_death = 0.5;
  p.rates.phi = 0.5;
  p.rates.lambda = 0.5;
  auto m1 = [](double) { return 2.0; };
  auto m2 = [](double) { return 1.0; };
  SiteStreamSimulator small(16, p, m1, m2, 9000, 1);
  SiteStreamSimulator large(32, p, m1, m2, 9000, 1);
  // identical initial draws on the shared site set
  for (std::int64_t x = -16; x <= 16; ++x) {
    CHECK(small.eta_at(x) == large.eta_at(x));
    CHECK(small.xi_at(x) == large.xi_at(x));
  }
  small.run_to(0.01);
  large.run_to(0.01);
  // the short horizon keeps the boundary influence outside the core window
  for (std::int64_t x = -4; x <= 4; ++x) {
    CHECK(small.eta_at(x) == large.eta_at(x));
    CHECK(small.xi_at(x) == large.xi_at(x));
  }
}

TEST_CASE("config validation") {
  TwoSpeciesParams p = make_params(1);
  CHECK_THROWS_AS(p.validate(), Error);
  TwoSpeciesConfig bad;
  bad.eta = {1, 2};
  bad.xi = {0};
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("tau-leap mode approximates the exact dynamics") {
  const std::int32_t n = 16;
  TwoSpeciesParams p = make_params(n);
  p.rates.alpha1 = 0.5;
  p.rates.alpha2 = 0.5;
  p.rates.kappa_death = 0.5;
  p.rates.phi = 0.5;
  p.rates.lambda = 0.5;
  p.rates.beta = 0.5;
  Profile m1 = Profile::constant(n, 2.0);
  Profile m2 = Profile::constant(n, 1.0);
  const double horizon = 0.1;

  auto mean_final_xi = [&](double tau, std::uint64_t base) {
    double sum = 0.0;
    const std::uint64_t reps = 200;
    for (std::uint64_t rep = 0; rep < reps; ++rep) {
      TsSimOptions options;
      options.horizon = horizon;
      options.seed = derive_seed(base, rep + 1);
      options.tau = tau;
      TsTrajectory trajectory = simulate_torus(
          TwoSpeciesConfig::poisson_init(m1, m2, derive_seed(base + 1, rep)), p,
          options);
      sum += static_cast<double>(trajectory.final_config.total_xi());
      for (auto v : trajectory.final_config.eta) CHECK(v >= 0);
      for (auto v : trajectory.final_config.xi) CHECK(v >= 0);
    }
    return sum / static_cast<double>(reps);
  };
  double exact = mean_final_xi(0.0, 71);
  double leap = mean_final_xi(2e-5, 81);
  // per-replica sd of the xi total is ~3.3, so 200 replicas give ~0.23;
  // allow the O(tau) stepping and clamping bias on top
  CHECK(std::fabs(exact - leap) < 1.2);
}
