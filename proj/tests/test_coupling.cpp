#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>

#include "coupling.hpp"
#include "errors.hpp"
#include "rng.hpp"
#include "stats.hpp"

using namespace episim;

namespace {

ModelParams irp_inf(double lambda, double beta, double phi) {
  ModelParams p;
  p.lambda = lambda;
  p.beta = beta;
  p.phi = phi;
  p.recovery = RecoveryMode::Individual;
  return p;
}

CoupledPair make_pair(const ModelParams& a, const ModelParams& b,
                      bool ordered = true) {
  CoupledPair pair;
  pair.params_a = a;
  pair.params_b = b;
  pair.config_a = ClusterConfig::single_seed(a.d);
  pair.config_b = ClusterConfig::single_seed(a.d);
  pair.ordered = ordered;
  return pair;
}

}  // namespace

TEST_CASE("identical params and configs evolve identically, event for event") {
  ModelParams p = irp_inf(0.6, 0.3, 0.9);
  CoupledPair pair = make_pair(p, p);
  CoupledSimulateOptions options;
  options.horizon = 25.0;
  options.seed = 3;
  options.event_budget = 30000;
  CoupledTrajectory trajectory = coupled_simulate(pair, options);
  CHECK(trajectory.events.size() > 0);
  for (const auto& event : trajectory.events) {
    CHECK(event.a_after == event.b_after);
  }
}

TEST_CASE("ordered coupling preserves pointwise dominance at every event") {
  ModelParams a = irp_inf(0.5, 0.5, 2.0);
  ModelParams b = irp_inf(0.5, 0.5, 1.0);
  CoupledSimulateOptions options;
  options.horizon = 50.0;
  options.event_budget = 20000;
  for (std::uint64_t rep = 0; rep < 25; ++rep) {
    options.seed = derive_seed(11, rep + 1);
    CoupledTrajectory trajectory =
        coupled_simulate(make_pair(a, b), options);
    OrderingCheckResult check = ordering_check(trajectory);
    CHECK(check.ok);
  }
}

TEST_CASE("all-zero rates: both marginals die, ordering holds vacuously") {
  ModelParams p = irp_inf(0.0, 0.0, 0.0);
  CoupledSimulateOptions options;
  options.horizon = 20.0;
  options.seed = 4;
  CoupledTrajectory trajectory = coupled_simulate(make_pair(p, p), options);
  CHECK(trajectory.final_a.empty());
  CHECK(trajectory.final_b.empty());
  CHECK(ordering_check(trajectory).ok);
}

TEST_CASE("ordering detector reports a perturbed event") {
  ModelParams a = irp_inf(0.4, 0.4, 1.5);
  ModelParams b = irp_inf(0.4, 0.4, 0.7);
  CoupledSimulateOptions options;
  options.horizon = 15.0;
  options.event_budget = 5000;
  CoupledTrajectory trajectory;
  for (std::uint64_t seed = 1; trajectory.events.size() <= 2; ++seed) {
    REQUIRE(seed < 50);  // early extinction every time would be a bug
    options.seed = seed;
    trajectory = coupled_simulate(make_pair(a, b), options);
  }
  REQUIRE(ordering_check(trajectory).ok);

  // fixture: swap the marginals in one event
  std::size_t target = trajectory.events.size() / 2;
  auto& event = trajectory.events[target];
  event.a_after = 0;
  event.b_after = 5;
  OrderingCheckResult check = ordering_check(trajectory);
  CHECK(!check.ok);
  CHECK(check.event_index == target);
  CHECK(check.t == trajectory.events[target].t);
}

TEST_CASE("empty trajectories pass the ordering check") {
  CoupledTrajectory empty;
  CHECK(ordering_check(empty).ok);
}

TEST_CASE("ordered validation rejects non-dominating parameters") {
  ModelParams a = irp_inf(0.3, 0.3, 1.0);
  ModelParams b = irp_inf(0.5, 0.3, 1.0);  // lambda_b > lambda_a
  CoupledPair pair = make_pair(a, b);
  CHECK_THROWS_AS(pair.validate(), Error);

  ModelParams c = irp_inf(0.3, 0.3, 1.0);
  CoupledPair mixed = make_pair(a, c);
  mixed.params_b.recovery = RecoveryMode::Cluster;
  CHECK_THROWS_AS(mixed.validate(), Error);
}

TEST_CASE("contact domination: shared recovery clock at lambda = 0") {
  ModelParams p = irp_inf(0.0, 0.0, 0.0);
  CoupledSimulateOptions options;
  options.horizon = 30.0;
  options.seed = 5;
  CoupledTrajectory trajectory =
      dominate_contact(p, ClusterConfig::single_seed(1), options);
  // single shared recovery ring kills both at once
  REQUIRE(trajectory.events.size() == 1);
  CHECK(trajectory.events[0].a_after == 0);
  CHECK(trajectory.events[0].b_after == 0);
  CHECK(ordering_check(trajectory, DominationKind::Occupancy).ok);
}

TEST_CASE("model dominates the contact process in occupancy") {
  ModelParams p = irp_inf(1.0, 0.4, 3.0);
  CoupledSimulateOptions options;
  options.horizon = 50.0;
  options.event_budget = 20000;
  for (std::uint64_t rep = 0; rep < 20; ++rep) {
    options.seed = derive_seed(21, rep + 1);
    CoupledTrajectory trajectory =
        dominate_contact(p, ClusterConfig::single_seed(1), options);
    CHECK(ordering_check(trajectory, DominationKind::Occupancy).ok);
  }
}

TEST_CASE("empty initial configuration stays empty in both marginals") {
  ModelParams p = irp_inf(1.0, 0.5, 1.0);
  CoupledSimulateOptions options;
  options.horizon = 5.0;
  options.seed = 6;
  CoupledTrajectory trajectory = dominate_contact(p, ClusterConfig{}, options);
  CHECK(trajectory.events.empty());
  CHECK(trajectory.final_a.empty());
  CHECK(trajectory.final_b.empty());
}

TEST_CASE("coupled marginals match the single-process law (KS)") {
  // subcritical parameters so every replica ends within the horizon
  ModelParams a = irp_inf(0.35, 0.25, 0.5);
  ModelParams b = irp_inf(0.25, 0.15, 0.3);
  const double horizon = 6.0;
  const std::size_t replicas = 500;

  std::vector<double> coupled_a, coupled_b, single_a, single_b;
  for (std::size_t rep = 0; rep < replicas; ++rep) {
    CoupledSimulateOptions options;
    options.horizon = horizon;
    options.seed = derive_seed(31, rep + 1);
    options.record_events = false;
    CoupledTrajectory trajectory =
        coupled_simulate(make_pair(a, b), options);
    coupled_a.push_back(static_cast<double>(trajectory.final_a.total()));
    coupled_b.push_back(static_cast<double>(trajectory.final_b.total()));

    SimulateOptions single;
    single.horizon = horizon;
    single.seed = derive_seed(57, rep + 1);
    single_a.push_back(static_cast<double>(
        simulate(ClusterConfig::single_seed(1), a, single).final_config.total()));
    single.seed = derive_seed(91, rep + 1);
    single_b.push_back(static_cast<double>(
        simulate(ClusterConfig::single_seed(1), b, single).final_config.total()));
  }
  auto ks_a = ks_two_sample(coupled_a, single_a);
  auto ks_b = ks_two_sample(coupled_b, single_b);
  CHECK(ks_a.p_value > 0.01);
  CHECK(ks_b.p_value > 0.01);
}

TEST_CASE("cluster-mode coupling keeps ordering through mass recoveries") {
  ModelParams a = irp_inf(0.5, 0.4, 1.6);
  a.recovery = RecoveryMode::Cluster;
  ModelParams b = irp_inf(0.3, 0.2, 0.8);
  b.recovery = RecoveryMode::Cluster;
  CoupledSimulateOptions options;
  options.horizon = 40.0;
  options.event_budget = 20000;
  for (std::uint64_t rep = 0; rep < 25; ++rep) {
    options.seed = derive_seed(47, rep + 1);
    CoupledTrajectory trajectory =
        coupled_simulate(make_pair(a, b), options);
    CHECK(ordering_check(trajectory).ok);
  }
}

TEST_CASE("shared recovery clocks are maximal: B never drops without A") {
  // equal parameters, A starting above B: every level that can lower B can
  // also lower A, so an individual recovery in B always fires in A too
  ModelParams p = irp_inf(0.5, 0.3, 1.2);
  CoupledPair pair;
  pair.params_a = p;
  pair.params_b = p;
  pair.config_a.set(make_site(0), 1, 3);
  pair.config_a.set(make_site(1), 1, 1);
  pair.config_b.set(make_site(0), 1, 1);
  pair.ordered = true;

  for (std::uint64_t rep = 0; rep < 30; ++rep) {
    CoupledSimulateOptions options;
    options.horizon = 20.0;
    options.seed = derive_seed(73, rep + 1);
    options.event_budget = 10000;
    CoupledTrajectory trajectory = coupled_simulate(pair, options);
    REQUIRE(ordering_check(trajectory).ok);

    std::map<std::int64_t, std::pair<std::int64_t, std::int64_t>> state;
    for (const auto& [coord, a, b] : trajectory.initial) {
      state[coord[0]] = {a, b};
    }
    for (const auto& event : trajectory.events) {
      auto& [a, b] = state[event.site[0]];
      std::int64_t delta_a = event.a_after - a;
      std::int64_t delta_b = event.b_after - b;
      if (delta_b == -1) CHECK(delta_a == -1);
      a = event.a_after;
      b = event.b_after;
    }
  }
}

TEST_CASE("cluster-mode coupled marginals match the single-process law (KS)") {
  ModelParams a = irp_inf(0.35, 0.25, 0.6);
  a.recovery = RecoveryMode::Cluster;
  ModelParams b = irp_inf(0.2, 0.1, 0.4);
  b.recovery = RecoveryMode::Cluster;
  const double horizon = 6.0;
  const std::size_t replicas = 500;

  std::vector<double> coupled_a, single_a;
  for (std::size_t rep = 0; rep < replicas; ++rep) {
    CoupledSimulateOptions options;
    options.horizon = horizon;
    options.seed = derive_seed(131, rep + 1);
    options.record_events = false;
    CoupledTrajectory trajectory = coupled_simulate(make_pair(a, b), options);
    coupled_a.push_back(static_cast<double>(trajectory.final_a.total()));

    SimulateOptions single;
    single.horizon = horizon;
    single.seed = derive_seed(157, rep + 1);
    single_a.push_back(static_cast<double>(
        simulate(ClusterConfig::single_seed(1), a, single).final_config.total()));
  }
  auto ks = ks_two_sample(coupled_a, single_a);
  CHECK(ks.p_value > 0.01);
}

TEST_CASE("coupled marginal extinction times match the single-process law") {
  // subcritical, so extinction times are finite and continuous: a sharper
  // distributional probe than count histograms
  ModelParams a = irp_inf(0.3, 0.2, 0.45);
  ModelParams b = irp_inf(0.2, 0.1, 0.25);
  const double horizon = 200.0;
  const std::size_t replicas = 400;

  std::vector<double> coupled_b_death, single_b_death;
  for (std::size_t rep = 0; rep < replicas; ++rep) {
    CoupledSimulateOptions options;
    options.horizon = horizon;
    options.seed = derive_seed(171, rep + 1);
    CoupledTrajectory trajectory = coupled_simulate(make_pair(a, b), options);
    REQUIRE(trajectory.final_b.empty());
    // forward scan: the event that takes B's total to zero
    std::map<std::int64_t, std::int64_t> b_counts;
    std::int64_t b_total = 0;
    for (const auto& [coord, va, vb] : trajectory.initial) {
      (void)va;
      b_counts[coord[0]] = vb;
      b_total += vb;
    }
    double death = horizon;
    for (const auto& event : trajectory.events) {
      std::int64_t& count = b_counts[event.site[0]];
      b_total += event.b_after - count;
      count = event.b_after;
      if (b_total == 0) {
        death = event.t;
        break;
      }
    }
    coupled_b_death.push_back(death);

    SimulateOptions single;
    single.horizon = horizon;
    single.seed = derive_seed(193, rep + 1);
    Trajectory reference =
        simulate(ClusterConfig::single_seed(1), b, single);
    REQUIRE(reference.extinct());
    single_b_death.push_back(reference.extinction_time);
  }
  auto ks = ks_two_sample(coupled_b_death, single_b_death);
  CHECK(ks.p_value > 0.01);
}
