#pragma once

#include <cstdint>
#include <vector>

#include "cluster_model.hpp"

namespace episim {

// Two cluster processes driven by shared per-site, per-level Poisson clocks:
// level-i recovery clocks affect a process iff its count is >= i, and the
// smaller-rate process reads each infection ring through a Bernoulli
// thinning coin shared with the larger-rate one.
struct CoupledPair {
  ClusterConfig config_a;
  ClusterConfig config_b;
  ModelParams params_a;
  ModelParams params_b;
  // Declares config_a >= config_b pointwise together with
  // (lambda, beta, phi, kappa)_a >= (lambda, beta, phi, kappa)_b.
  bool ordered = false;

  void validate() const;
};

enum class DominationKind {
  Counts,     // xi_a(x) >= xi_b(x) at every site
  Occupancy,  // 1{xi_a(x) > 0} >= 1{xi_b(x) > 0}
};

struct CoupledEvent {
  double t;
  Coord site;
  std::int64_t a_after;
  std::int64_t b_after;
};

struct CoupledTrajectory {
  std::vector<std::tuple<Coord, std::int64_t, std::int64_t>> initial;  // sorted
  std::vector<CoupledEvent> events;  // state-changing events only
  ClusterConfig final_a;
  ClusterConfig final_b;
  double final_time = 0.0;
  std::uint64_t rings = 0;  // clock rings, including null ones
  bool truncated = false;
  bool ordered = false;
};

struct CoupledSimulateOptions {
  double horizon = 0.0;
  std::uint64_t seed = 1;
  std::uint64_t event_budget = 1'000'000;
  bool record_events = true;
};

CoupledTrajectory coupled_simulate(const CoupledPair& pair,
                                   const CoupledSimulateOptions& options);

struct OrderingCheckResult {
  bool ok = true;
  double t = 0.0;
  Coord site = make_site(0);
  std::size_t event_index = 0;  // index into events, or npos-like if initial
  bool initial_violation = false;
};

// Scans the initial state and every recorded event for a violation of the
// requested domination. Ordering can only break at the event site, so the
// per-event pair (a_after, b_after) carries the full information.
OrderingCheckResult ordering_check(const CoupledTrajectory& trajectory,
                                   DominationKind kind = DominationKind::Counts);

// Basic coupling of the model against the basic contact process with the
// same outside rate (kappa = 1, beta = phi = 0, same recovery mode). The
// contact marginal starts from the occupancy indicator of config0.
CoupledTrajectory dominate_contact(const ModelParams& params,
                                   const ClusterConfig& config0,
                                   const CoupledSimulateOptions& options);

}  // namespace episim
