#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lattice.hpp"

namespace episim {

enum class RecoveryMode { Individual, Cluster };

// Parameters of the cluster epidemic processes CRP(kappa) / IRP(kappa).
// kappa_cap == kInfiniteCap encodes the infinite-cluster variants.
struct ModelParams {
  static constexpr std::int64_t kInfiniteCap =
      std::numeric_limits<std::int64_t>::max();

  double lambda = 0.0;  // outside infection rate into healthy clusters
  double beta = 0.0;    // outside infection rate into infected clusters
  double phi = 0.0;     // within-cluster infection rate per infected individual
  std::int64_t kappa_cap = kInfiniteCap;
  int d = 1;
  RecoveryMode recovery = RecoveryMode::Individual;

  bool infinite_cap() const { return kappa_cap == kInfiniteCap; }

  // Existence for the infinite-cap processes is only established for
  // beta <= lambda; runs outside that regime are legal pathwise from finite
  // support but get flagged.
  bool outside_existence_regime() const {
    return infinite_cap() && beta > lambda;
  }

  void validate() const;
};

// Sparse configuration: only sites with at least one infected individual
// are stored.
struct ClusterConfig {
  std::unordered_map<SiteKey, std::int64_t> counts;

  std::int64_t at(const Coord& x, int d) const;
  void set(const Coord& x, int d, std::int64_t count);
  std::int64_t total() const;
  bool empty() const { return counts.empty(); }

  static ClusterConfig single_seed(int d);
};

enum class ClusterEventKind {
  OutsideInfectNew,   // 0 -> 1
  OutsideInfectMore,  // i -> i+1, outside pressure
  WithinInfect,       // i -> i+1, within-cluster
  RecoverOne,         // i -> i-1
  RecoverAll,         // i -> 0
};

struct SiteEvent {
  ClusterEventKind kind;
  double rate;
};

// The per-site transition menu at x for the given configuration. Events are
// listed when the state structurally allows them, with their exact rates.
std::vector<SiteEvent> site_rates(const ClusterConfig& config, const Coord& x,
                                  const ModelParams& params);

// Total exit rate: sum of site_rates over the active window (support plus
// its neighbors). Reference path for the engine's incremental total; the
// simulator's paranoid mode compares against it every event.
double total_exit_rate(const ClusterConfig& config, const ModelParams& params);

struct TrajectoryEvent {
  double t;
  Coord site;
  std::int64_t delta;        // signed count change at the site
  std::int64_t count_after;  // resulting count at the site
};

struct ClusterSnapshot {
  double t;
  std::vector<std::pair<Coord, std::int64_t>> sites;  // sorted by coordinate
};

struct Trajectory {
  std::vector<ClusterSnapshot> snapshots;
  std::vector<TrajectoryEvent> events;  // populated when record_events is set
  ClusterConfig final_config;
  double final_time = 0.0;
  std::uint64_t event_count = 0;
  bool truncated = false;       // event budget exhausted
  bool early_survival = false;  // total count reached the survival cutoff
  double extinction_time = -1.0;

  bool extinct() const { return extinction_time >= 0.0; }
};

struct SimulateOptions {
  double horizon = 0.0;
  std::uint64_t seed = 1;
  std::uint64_t event_budget = 100'000'000;
  // When > 0, a run whose total infected count reaches the cutoff stops and
  // is flagged early_survival: the chance of extinction before any fixed
  // horizon from that size is below (1/phi)^cutoff, far under estimator noise.
  std::uint64_t survival_count_cutoff = 0;
  double snapshot_interval = 0.0;  // 0: snapshot only at start and end
  bool record_events = false;
  bool paranoid_checks = false;  // recompute all channel totals every event
};

Trajectory simulate(const ClusterConfig& config0, const ModelParams& params,
                    const SimulateOptions& options);

struct SurvivalEstimate {
  double p_hat = 0.0;
  double ci_halfwidth = 0.0;  // normal-approximation 95 percent
  std::uint64_t replicas = 0;
  std::uint64_t survivors = 0;
  std::uint64_t truncated = 0;
  std::uint64_t early_decided = 0;
  double horizon = 0.0;
  std::uint64_t master_seed = 0;
  std::vector<std::uint8_t> survived;  // per replica, index-deterministic
};

struct SurvivalRunOptions {
  std::uint64_t event_budget = 100'000'000;
  std::uint64_t survival_count_cutoff = 10'000;
  int jobs = 0;  // <= 0: hardware concurrency
};

SurvivalEstimate survival_probability(const ModelParams& params,
                                      const ClusterConfig& config0,
                                      double horizon, std::uint64_t replicas,
                                      std::uint64_t master_seed,
                                      const SurvivalRunOptions& options = {});

struct PhiSearchCriterion {
  double horizon = 100.0;
  std::uint64_t replicas = 500;
  double threshold = 0.05;  // pseudo-survival level the bisection targets
};

struct PhiProbe {
  double phi;
  SurvivalEstimate estimate;
};

struct PhiSearchResult {
  double phi_c = 0.0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  std::vector<PhiProbe> probes;
};

PhiSearchResult critical_phi_search(const ModelParams& base,
                                    const ClusterConfig& config0,
                                    double phi_lo, double phi_hi,
                                    const PhiSearchCriterion& criterion,
                                    double tolerance,
                                    std::uint64_t master_seed,
                                    const SurvivalRunOptions& options = {});

}  // namespace episim
