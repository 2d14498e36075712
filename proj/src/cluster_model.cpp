#include "cluster_model.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "weighted_index.hpp"

namespace episim {

void ModelParams::validate() const {
  require(lambda >= 0.0 && beta >= 0.0 && phi >= 0.0,
          ErrorCode::InvalidArgument, "rates lambda, beta, phi must be >= 0");
  require(kappa_cap >= 1, ErrorCode::InvalidArgument, "kappa_cap must be >= 1");
  require(d >= 1 && d <= kMaxDim, ErrorCode::InvalidArgument,
          "dimension must be in [1, 3]");
}

std::int64_t ClusterConfig::at(const Coord& x, int d) const {
  auto it = counts.find(pack_site(x, d));
  return it == counts.end() ? 0 : it->second;
}

void ClusterConfig::set(const Coord& x, int d, std::int64_t count) {
  require(count >= 0, ErrorCode::InvalidArgument, "counts must be >= 0");
  SiteKey key = pack_site(x, d);
  if (count == 0) {
    counts.erase(key);
  } else {
    counts[key] = count;
  }
}

std::int64_t ClusterConfig::total() const {
  std::int64_t sum = 0;
  for (const auto& [key, c] : counts) sum += c;
  return sum;
}

ClusterConfig ClusterConfig::single_seed(int d) {
  ClusterConfig config;
  config.set(make_site(0), d, 1);
  return config;
}

std::vector<SiteEvent> site_rates(const ClusterConfig& config, const Coord& x,
                                  const ModelParams& params) {
  params.validate();
  std::int64_t neighbor_sum = 0;
  for (const Coord& y : neighbors(x, params.d)) {
    neighbor_sum += config.at(y, params.d);
  }
  const std::int64_t count = config.at(x, params.d);
  const double s = static_cast<double>(neighbor_sum);

  std::vector<SiteEvent> events;
  if (count == 0) {
    events.push_back({ClusterEventKind::OutsideInfectNew, params.lambda * s});
    return events;
  }
  if (count <= params.kappa_cap - 1) {
    events.push_back({ClusterEventKind::OutsideInfectMore, params.beta * s});
    events.push_back(
        {ClusterEventKind::WithinInfect, params.phi * static_cast<double>(count)});
  }
  if (params.recovery == RecoveryMode::Individual) {
    events.push_back({ClusterEventKind::RecoverOne, static_cast<double>(count)});
  } else {
    events.push_back({ClusterEventKind::RecoverAll, 1.0});
  }
  return events;
}

double total_exit_rate(const ClusterConfig& config, const ModelParams& params) {
  params.validate();
  std::unordered_map<SiteKey, bool> window;
  for (const auto& [key, count] : config.counts) {
    (void)count;
    window[key] = true;
    Coord x = unpack_site(key, params.d);
    for (const Coord& y : neighbors(x, params.d)) {
      window[pack_site(y, params.d)] = true;
    }
  }
  double total = 0.0;
  for (const auto& [key, present] : window) {
    (void)present;
    for (const SiteEvent& event :
         site_rates(config, unpack_site(key, params.d), params)) {
      total += event.rate;
    }
  }
  return total;
}

namespace {

// Gillespie engine over the dynamic active window (support plus neighbors).
// Four event channels with integer per-site weights:
//   A: outside infection into a healthy cluster, weight S(z) if count = 0
//   B: outside infection into an infected cluster, weight S(z) if 1 <= count <= kappa-1
//   C: within-cluster infection, weight count if 1 <= count <= kappa-1
//   D: recovery, weight count (individual) or 1{count >= 1} (cluster)
// Total rate = lambda*A + beta*B + phi*C + D with A..D exact integers.
class ClusterEngine {
 public:
  ClusterEngine(const ClusterConfig& config0, const ModelParams& params)
      : params_(params), cap_minus_1_(params.infinite_cap()
                                          ? ModelParams::kInfiniteCap
                                          : params.kappa_cap - 1) {
    for (const auto& [key, count] : config0.counts) {
      require(count >= 1, ErrorCode::InvalidArgument,
              "stored cluster counts must be >= 1");
      require(params_.infinite_cap() || count <= params_.kappa_cap,
              ErrorCode::InvalidArgument, "count exceeds kappa_cap");
      std::uint32_t i = ensure(key);
      count_[i] = count;
      total_count_ += count;
    }
    // Second pass: neighbor sums and weights for the full window.
    std::vector<SiteKey> support(key_of_);
    for (SiteKey key : support) {
      std::int64_t c = count_[index_of_.at(key)];
      Coord x = unpack_site(key, params_.d);
      for (const Coord& y : neighbors(x, params_.d)) {
        std::uint32_t j = ensure(pack_site(y, params_.d));
        nbr_[j] += c;
      }
    }
    for (std::uint32_t i = 0; i < key_of_.size(); ++i) refresh(i);
  }

  double total_rate() const {
    return params_.lambda * static_cast<double>(a_.total()) +
           params_.beta * static_cast<double>(b_.total()) +
           params_.phi * static_cast<double>(c_.total()) +
           static_cast<double>(d_.total());
  }

  std::int64_t total_count() const { return total_count_; }

  // Applies one event; returns (site index, delta).
  std::pair<std::uint32_t, std::int64_t> step(Rng& rng) {
    const double a = params_.lambda * static_cast<double>(a_.total());
    const double b = params_.beta * static_cast<double>(b_.total());
    const double c = params_.phi * static_cast<double>(c_.total());
    const double d = static_cast<double>(d_.total());
    const double rates[4] = {a, b, c, d};
    const double total = a + b + c + d;
    double u = rng.uniform01() * total;
    int channel = -1;
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) {
      if (rates[k] <= 0.0) continue;
      acc += rates[k];
      channel = k;
      if (u < acc) break;
    }
    require(channel >= 0, ErrorCode::InvalidArgument, "no active channel");

    std::uint32_t site = 0;
    std::int64_t delta = 0;
    switch (channel) {
      case 0:
        site = static_cast<std::uint32_t>(a_.sample(rng.below(a_.total())));
        delta = +1;
        break;
      case 1:
        site = static_cast<std::uint32_t>(b_.sample(rng.below(b_.total())));
        delta = +1;
        break;
      case 2:
        site = static_cast<std::uint32_t>(c_.sample(rng.below(c_.total())));
        delta = +1;
        break;
      default:
        site = static_cast<std::uint32_t>(d_.sample(rng.below(d_.total())));
        delta = (params_.recovery == RecoveryMode::Individual) ? -1
                                                               : -count_[site];
        break;
    }
    apply(site, delta);
    return {site, delta};
  }

  void apply(std::uint32_t site, std::int64_t delta) {
    require(count_[site] + delta >= 0 &&
                count_[site] + delta < (std::int64_t{1} << 62),
            ErrorCode::CountOverflow, "cluster count out of range");
    count_[site] += delta;
    total_count_ += delta;
    Coord x = unpack_site(key_of_[site], params_.d);
    for (const Coord& y : neighbors(x, params_.d)) {
      std::uint32_t j = ensure(pack_site(y, params_.d));
      nbr_[j] += delta;
      refresh(j);
    }
    refresh(site);
  }

  SiteKey key_of(std::uint32_t i) const { return key_of_[i]; }
  std::int64_t count_of(std::uint32_t i) const { return count_[i]; }

  std::vector<std::pair<Coord, std::int64_t>> sorted_support() const {
    std::vector<std::pair<Coord, std::int64_t>> out;
    for (std::uint32_t i = 0; i < key_of_.size(); ++i) {
      if (count_[i] > 0) out.emplace_back(unpack_site(key_of_[i], params_.d), count_[i]);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  // Recomputes every channel total from the per-site state and checks exact
  // equality with the incrementally maintained Fenwick totals.
  void check_totals() const {
    std::uint64_t a = 0, b = 0, c = 0, d = 0;
    for (std::uint32_t i = 0; i < key_of_.size(); ++i) {
      a += weight_a(i);
      b += weight_b(i);
      c += weight_c(i);
      d += weight_d(i);
    }
    require(a == a_.total() && b == b_.total() && c == c_.total() &&
                d == d_.total(),
            ErrorCode::InvalidArgument,
            "channel totals drifted from recomputation");
  }

 private:
  std::uint32_t ensure(SiteKey key) {
    auto it = index_of_.find(key);
    if (it != index_of_.end()) return it->second;
    std::uint32_t i = static_cast<std::uint32_t>(key_of_.size());
    index_of_.emplace(key, i);
    key_of_.push_back(key);
    count_.push_back(0);
    nbr_.push_back(0);
    a_.push_back();
    b_.push_back();
    c_.push_back();
    d_.push_back();
    return i;
  }

  std::uint64_t weight_a(std::uint32_t i) const {
    return count_[i] == 0 ? static_cast<std::uint64_t>(nbr_[i]) : 0;
  }
  std::uint64_t weight_b(std::uint32_t i) const {
    return (count_[i] >= 1 && count_[i] <= cap_minus_1_)
               ? static_cast<std::uint64_t>(nbr_[i])
               : 0;
  }
  std::uint64_t weight_c(std::uint32_t i) const {
    return (count_[i] >= 1 && count_[i] <= cap_minus_1_)
               ? static_cast<std::uint64_t>(count_[i])
               : 0;
  }
  std::uint64_t weight_d(std::uint32_t i) const {
    if (params_.recovery == RecoveryMode::Individual) {
      return static_cast<std::uint64_t>(count_[i]);
    }
    return count_[i] >= 1 ? 1 : 0;
  }

  void refresh(std::uint32_t i) {
    a_.set(i, weight_a(i));
    b_.set(i, weight_b(i));
    c_.set(i, weight_c(i));
    d_.set(i, weight_d(i));
  }

  const ModelParams& params_;
  const std::int64_t cap_minus_1_;
  std::unordered_map<SiteKey, std::uint32_t> index_of_;
  std::vector<SiteKey> key_of_;
  std::vector<std::int64_t> count_;
  std::vector<std::int64_t> nbr_;
  WeightedIndex a_, b_, c_, d_;
  std::int64_t total_count_ = 0;
};

}  // namespace

Trajectory simulate(const ClusterConfig& config0, const ModelParams& params,
                    const SimulateOptions& options) {
  params.validate();
  require(options.horizon >= 0.0, ErrorCode::InvalidArgument,
          "horizon must be >= 0");

  ClusterEngine engine(config0, params);
  Rng rng(options.seed);
  Trajectory out;
  double t = 0.0;

  auto snapshot = [&](double at) {
    out.snapshots.push_back({at, engine.sorted_support()});
  };
  snapshot(0.0);
  double next_snapshot = options.snapshot_interval > 0.0
                             ? options.snapshot_interval
                             : std::numeric_limits<double>::infinity();

  if (engine.total_count() == 0) out.extinction_time = 0.0;

  while (engine.total_count() > 0) {
    const double rate = engine.total_rate();
    if (rate <= 0.0) break;  // unreachable while infected individuals remain
    const double dt = rng.exponential(rate);
    if (t + dt > options.horizon) {
      t = options.horizon;
      break;
    }
    t += dt;
    while (t >= next_snapshot) {
      snapshot(next_snapshot);
      next_snapshot += options.snapshot_interval;
    }
    auto [site, delta] = engine.step(rng);
    ++out.event_count;
    if (options.record_events) {
      out.events.push_back({t, unpack_site(engine.key_of(site), params.d),
                            delta, engine.count_of(site)});
    }
    if (options.paranoid_checks) {
      engine.check_totals();
      ClusterConfig probe;
      for (const auto& [coord, count] : engine.sorted_support()) {
        probe.set(coord, params.d, count);
      }
      const double reference = total_exit_rate(probe, params);
      const double maintained = engine.total_rate();
      require(std::fabs(maintained - reference) <=
                  1e-9 * std::max(1.0, reference),
              ErrorCode::InvalidArgument,
              "engine total diverged from the site_rates sum");
    }
    if (engine.total_count() == 0) {
      out.extinction_time = t;
      break;
    }
    if (options.survival_count_cutoff > 0 &&
        static_cast<std::uint64_t>(engine.total_count()) >=
            options.survival_count_cutoff) {
      out.early_survival = true;
      break;
    }
    if (out.event_count >= options.event_budget) {
      out.truncated = true;
      break;
    }
  }

  if (!out.truncated && !out.early_survival && engine.total_count() > 0) {
    t = options.horizon;
  } else if (engine.total_count() == 0) {
    t = options.horizon;  // absorbing state; the path is constant afterwards
  }
  out.final_time = t;
  while (next_snapshot <= out.final_time) {
    snapshot(next_snapshot);
    next_snapshot += options.snapshot_interval;
  }
  if (out.snapshots.back().t != out.final_time) snapshot(out.final_time);
  for (const auto& [coord, count] : engine.sorted_support()) {
    out.final_config.set(coord, params.d, count);
  }
  return out;
}

SurvivalEstimate survival_probability(const ModelParams& params,
                                      const ClusterConfig& config0,
                                      double horizon, std::uint64_t replicas,
                                      std::uint64_t master_seed,
                                      const SurvivalRunOptions& options) {
  params.validate();
  require(replicas >= 1, ErrorCode::InvalidArgument, "replicas must be >= 1");

  SurvivalEstimate out;
  out.replicas = replicas;
  out.horizon = horizon;
  out.master_seed = master_seed;
  out.survived.assign(replicas, 0);
  std::vector<std::uint8_t> truncated(replicas, 0);
  std::vector<std::uint8_t> early(replicas, 0);

  parallel_for(replicas, options.jobs, [&](std::size_t i) {
    SimulateOptions sim;
    sim.horizon = horizon;
    sim.seed = derive_seed(master_seed, i + 1);
    sim.event_budget = options.event_budget;
    sim.survival_count_cutoff = options.survival_count_cutoff;
    Trajectory trajectory = simulate(config0, params, sim);
    out.survived[i] = trajectory.final_config.empty() ? 0 : 1;
    truncated[i] = trajectory.truncated ? 1 : 0;
    early[i] = trajectory.early_survival ? 1 : 0;
  });

  for (std::size_t i = 0; i < replicas; ++i) {
    out.survivors += out.survived[i];
    out.truncated += truncated[i];
    out.early_decided += early[i];
  }
  out.p_hat = static_cast<double>(out.survivors) / static_cast<double>(replicas);
  out.ci_halfwidth = 1.96 * std::sqrt(out.p_hat * (1.0 - out.p_hat) /
                                      static_cast<double>(replicas));
  return out;
}

PhiSearchResult critical_phi_search(const ModelParams& base,
                                    const ClusterConfig& config0,
                                    double phi_lo, double phi_hi,
                                    const PhiSearchCriterion& criterion,
                                    double tolerance,
                                    std::uint64_t master_seed,
                                    const SurvivalRunOptions& options) {
  require(phi_lo >= 0.0 && phi_hi > phi_lo, ErrorCode::BracketInvalid,
          "BRACKET_INVALID: need 0 <= phi_lo < phi_hi");
  require(tolerance > 0.0, ErrorCode::InvalidArgument, "tolerance must be > 0");

  PhiSearchResult out;
  std::uint64_t probe_index = 0;
  auto probe = [&](double phi) -> const SurvivalEstimate& {
    ModelParams params = base;
    params.phi = phi;
    std::uint64_t seed = derive_seed(master_seed, ++probe_index, 0x70726F62);
    out.probes.push_back({phi, survival_probability(params, config0,
                                                    criterion.horizon,
                                                    criterion.replicas, seed,
                                                    options)});
    return out.probes.back().estimate;
  };

  double p_lo = probe(phi_lo).p_hat;
  double p_hi = probe(phi_hi).p_hat;
  require(p_lo < criterion.threshold && criterion.threshold < p_hi,
          ErrorCode::BracketInvalid,
          "BRACKET_INVALID: survival estimates do not straddle the threshold");

  double lo = phi_lo, hi = phi_hi;
  while (hi - lo > tolerance) {
    double mid = 0.5 * (lo + hi);
    double p_mid = probe(mid).p_hat;
    if (p_mid < criterion.threshold) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  out.bracket_lo = lo;
  out.bracket_hi = hi;
  out.phi_c = 0.5 * (lo + hi);
  return out;
}

}  // namespace episim
