#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "poisson_measures.hpp"
#include "rng.hpp"

namespace episim {

// Two-species migration-reaction process on the discrete torus T_N with
// diffusion accelerated by N^2.
struct TwoSpeciesParams {
  TildeParams rates;
  std::int32_t N = 2;

  void validate() const;
};

struct TwoSpeciesConfig {
  std::vector<std::int64_t> eta;  // healthy counts per site
  std::vector<std::int64_t> xi;   // infected counts per site

  std::size_t size() const { return eta.size(); }
  std::int64_t total_eta() const;
  std::int64_t total_xi() const;

  static TwoSpeciesConfig zeros(std::size_t n);
  static TwoSpeciesConfig poisson_init(const Profile& m1, const Profile& m2,
                                       std::uint64_t seed);
  void validate() const;
};

enum class TsEventKind {
  Birth1,        // eta + 1            at rate alpha1 (eta + xi)
  Death1,        // eta - 1            at rate kappa eta^2 (eta + xi^2)
  Birth2,        // xi + 1             at rate alpha2 (eta + xi)
  Death2,        // xi - 1             at rate kappa xi^2 (eta^2 + xi)
  Recovery,      // (eta+1, xi-1)      at rate xi
  WithinInfect,  // (eta-1, xi+1)      at rate phi xi 1{eta > 0}
  OutsideNew,    // (eta-1, xi+1)      at rate lambda S 1{eta > 0, xi = 0}
  OutsideMore,   // (eta-1, xi+1)      at rate beta S 1{eta > 0, xi > 0}
  JumpEtaLeft,   // healthy particle x -> x-1 at rate N^2/2 per particle
  JumpEtaRight,
  JumpXiLeft,
  JumpXiRight,
};

struct TsEvent {
  TsEventKind kind;
  double rate;
};

// Reaction transition menu at site x; S is the neighbor infected sum with
// torus wraparound.
std::vector<TsEvent> reaction_rates(const TwoSpeciesConfig& config,
                                    std::size_t x,
                                    const TwoSpeciesParams& params);

// Migration menu at site x: each particle jumps to each of the two
// neighbors at rate N^2 p(x,y) = N^2 / 2.
std::vector<TsEvent> diffusion_rates(const TwoSpeciesConfig& config,
                                     std::size_t x,
                                     const TwoSpeciesParams& params);

struct TsEventRecord {
  double t;
  TsEventKind kind;
  std::int32_t site;
  std::int32_t target;  // landing site for jumps, else same as site
};

struct TsSnapshot {
  double t;
  TwoSpeciesConfig config;
};

struct TsTrajectory {
  std::vector<TsSnapshot> snapshots;
  std::vector<TsEventRecord> events;  // when record_events is set
  TwoSpeciesConfig final_config;
  double final_time = 0.0;
  std::uint64_t event_count = 0;
  std::uint64_t tau_clamped = 0;  // tau-leap mode: counts clamped at zero
  bool truncated = false;
};

struct TsSimOptions {
  double horizon = 0.0;
  std::uint64_t seed = 1;
  std::uint64_t event_budget = 4'000'000'000ULL;
  std::vector<double> snapshot_times;  // ascending
  // Exploratory tau-leap stepping when > 0: per-step Poisson reaction counts
  // at frozen rates, negative counts clamped to zero (counted in
  // tau_clamped). Approximate; excluded from the acceptance suite.
  double tau = 0.0;
  bool record_events = false;
  bool paranoid_checks = false;
};

// Exact next-event simulation, binary-indexed trees over per-site integer
// channel weights.
TsTrajectory simulate_torus(const TwoSpeciesConfig& config0,
                            const TwoSpeciesParams& params,
                            const TsSimOptions& options);

// Test function on the continuum torus evaluated at the grid points.
struct Observable {
  std::string id;
  std::vector<double> values;

  static Observable from_function(const std::string& id, std::size_t n,
                                  const std::function<double(double)>& g);
};

// <pi_N, G> = (1/N) sum_x count(x) G(x/N), for each species.
struct PairingValue {
  double eta = 0.0;
  double xi = 0.0;
};
PairingValue empirical_pairing(const TwoSpeciesConfig& config,
                               const Observable& g);

// ---------------------------------------------------------------------------
// Shared-clock simulation keyed by absolute site coordinate, for the
// infinite-volume window experiment. Every site owns an RNG stream seeded
// from (master_seed, replica, coordinate); two runs on different tori make
// identical decisions wherever their neighborhoods still agree, so the
// discrepancy spreads inward from the boundary.
class SiteStreamSimulator {
 public:
  // Torus over absolute coordinates {-half, ..., +half}.
  SiteStreamSimulator(std::int64_t half, const TwoSpeciesParams& params,
                      const std::function<double(double)>& m1,
                      const std::function<double(double)>& m2,
                      std::uint64_t master_seed, std::uint64_t replica);

  void run_to(double t_end);

  std::int64_t eta_at(std::int64_t coordinate) const;
  std::int64_t xi_at(std::int64_t coordinate) const;
  std::uint64_t event_count() const { return events_; }

 private:
  std::size_t index_of(std::int64_t coordinate) const;
  void channel_rates(std::size_t i, double rates[]) const;
  double site_rate(std::size_t i) const;
  void fire(std::size_t i);
  void reschedule(std::size_t i, bool fresh);

  struct HeapLess;
  void heap_sift_up(std::size_t slot);
  void heap_sift_down(std::size_t slot);
  void heap_update(std::size_t site);
  bool heap_less(std::size_t a, std::size_t b) const;

  TwoSpeciesParams params_;
  std::int64_t half_ = 0;
  std::size_t n_ = 0;
  double now_ = 0.0;
  std::uint64_t events_ = 0;
  std::vector<std::int64_t> eta_, xi_;
  std::vector<Rng> stream_;
  std::vector<double> rate_;
  std::vector<double> next_t_;
  std::vector<std::size_t> heap_, pos_;
};

}  // namespace episim
