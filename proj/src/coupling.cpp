#include "coupling.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "rng.hpp"
#include "weighted_index.hpp"

namespace episim {

void CoupledPair::validate() const {
  params_a.validate();
  params_b.validate();
  require(params_a.d == params_b.d, ErrorCode::InvalidArgument,
          "coupled processes must share the dimension");
  require(params_a.recovery == params_b.recovery, ErrorCode::InvalidArgument,
          "coupled processes must share the recovery mode");
  if (ordered) {
    require(params_a.lambda >= params_b.lambda &&
                params_a.beta >= params_b.beta &&
                params_a.phi >= params_b.phi &&
                params_a.kappa_cap >= params_b.kappa_cap,
            ErrorCode::InvalidArgument,
            "ORDERED requires componentwise parameter dominance");
    for (const auto& [key, count] : config_b.counts) {
      auto it = config_a.counts.find(key);
      std::int64_t a = it == config_a.counts.end() ? 0 : it->second;
      require(a >= count, ErrorCode::InvalidArgument,
              "ORDERED requires config_a >= config_b pointwise");
    }
  }
}

namespace {

struct PairCount {
  std::int64_t a = 0;
  std::int64_t b = 0;
  std::int64_t mx() const { return std::max(a, b); }
};

// Shared-clock engine over the union active window. Channels mirror the
// graphical representation: per-site recovery levels, per-site within
// levels, and per directed edge outside-infection levels indexed by the
// source count, all realized lazily at the maximum of the two rates.
class CoupledEngine {
 public:
  CoupledEngine(const CoupledPair& pair)
      : pa_(pair.params_a),
        pb_(pair.params_b),
        d_(pair.params_a.d),
        individual_(pair.params_a.recovery == RecoveryMode::Individual),
        lambda_max_(std::max(pa_.lambda, pb_.lambda)),
        beta_max_(std::max(pa_.beta, pb_.beta)),
        phi_max_(std::max(pa_.phi, pb_.phi)),
        cap_a_(pa_.infinite_cap() ? ModelParams::kInfiniteCap : pa_.kappa_cap - 1),
        cap_b_(pb_.infinite_cap() ? ModelParams::kInfiniteCap : pb_.kappa_cap - 1) {
    for (const auto& [key, c] : pair.config_a.counts) {
      count_[ensure(key)].a = c;
      total_a_ += c;
    }
    for (const auto& [key, c] : pair.config_b.counts) {
      count_[ensure(key)].b = c;
      total_b_ += c;
    }
    std::vector<SiteKey> seeds(key_of_);
    for (SiteKey key : seeds) {
      std::int64_t mx = count_[index_of_.at(key)].mx();
      if (mx == 0) continue;
      Coord x = unpack_site(key, d_);
      for (const Coord& y : neighbors(x, d_)) {
        nbr_mx_[ensure(pack_site(y, d_))] += mx;
      }
    }
    for (std::uint32_t i = 0; i < key_of_.size(); ++i) refresh(i);
  }

  double total_rate() const {
    return lambda_max_ * static_cast<double>(wa_.total()) +
           beta_max_ * static_cast<double>(wb_.total()) +
           phi_max_ * static_cast<double>(wc_.total()) +
           static_cast<double>(wd_.total());
  }

  std::int64_t total_a() const { return total_a_; }
  std::int64_t total_b() const { return total_b_; }

  struct Fire {
    bool changed = false;
    std::uint32_t site = 0;
  };

  // Processes one clock ring; may change neither, one, or both marginals.
  Fire ring(Rng& rng) {
    const double ra = lambda_max_ * static_cast<double>(wa_.total());
    const double rb = beta_max_ * static_cast<double>(wb_.total());
    const double rc = phi_max_ * static_cast<double>(wc_.total());
    const double rd = static_cast<double>(wd_.total());
    const double rates[4] = {ra, rb, rc, rd};
    double u = rng.uniform01() * (ra + rb + rc + rd);
    int channel = -1;
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) {
      if (rates[k] <= 0.0) continue;
      acc += rates[k];
      channel = k;
      if (u < acc) break;
    }
    require(channel >= 0, ErrorCode::InvalidArgument, "no active channel");

    switch (channel) {
      case 0:
        return outside_ring(rng, /*into_healthy=*/true);
      case 1:
        return outside_ring(rng, /*into_healthy=*/false);
      case 2:
        return within_ring(rng);
      default:
        return recovery_ring(rng);
    }
  }

  PairCount counts_at(std::uint32_t i) const { return count_[i]; }
  SiteKey key_of(std::uint32_t i) const { return key_of_[i]; }

  std::vector<std::tuple<Coord, std::int64_t, std::int64_t>> sorted_pairs() const {
    std::vector<std::tuple<Coord, std::int64_t, std::int64_t>> out;
    for (std::uint32_t i = 0; i < key_of_.size(); ++i) {
      if (count_[i].a > 0 || count_[i].b > 0) {
        out.emplace_back(unpack_site(key_of_[i], d_), count_[i].a, count_[i].b);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::uint32_t ensure(SiteKey key) {
    auto it = index_of_.find(key);
    if (it != index_of_.end()) return it->second;
    std::uint32_t i = static_cast<std::uint32_t>(key_of_.size());
    index_of_.emplace(key, i);
    key_of_.push_back(key);
    count_.push_back({});
    nbr_mx_.push_back(0);
    wa_.push_back();
    wb_.push_back();
    wc_.push_back();
    wd_.push_back();
    return i;
  }

  bool elig_more_a(std::uint32_t i) const {
    return count_[i].a >= 1 && count_[i].a <= cap_a_;
  }
  bool elig_more_b(std::uint32_t i) const {
    return count_[i].b >= 1 && count_[i].b <= cap_b_;
  }
  std::int64_t level_cap_a(std::uint32_t i) const {
    return count_[i].a <= cap_a_ ? count_[i].a : 0;
  }
  std::int64_t level_cap_b(std::uint32_t i) const {
    return count_[i].b <= cap_b_ ? count_[i].b : 0;
  }

  std::uint64_t weight_a(std::uint32_t i) const {
    return (count_[i].a == 0 || count_[i].b == 0)
               ? static_cast<std::uint64_t>(nbr_mx_[i])
               : 0;
  }
  std::uint64_t weight_b(std::uint32_t i) const {
    return (elig_more_a(i) || elig_more_b(i))
               ? static_cast<std::uint64_t>(nbr_mx_[i])
               : 0;
  }
  std::uint64_t weight_c(std::uint32_t i) const {
    return static_cast<std::uint64_t>(std::max(level_cap_a(i), level_cap_b(i)));
  }
  std::uint64_t weight_d(std::uint32_t i) const {
    if (individual_) return static_cast<std::uint64_t>(count_[i].mx());
    return count_[i].mx() > 0 ? 1 : 0;
  }

  void refresh(std::uint32_t i) {
    wa_.set(i, weight_a(i));
    wb_.set(i, weight_b(i));
    wc_.set(i, weight_c(i));
    wd_.set(i, weight_d(i));
  }

  void apply(std::uint32_t i, std::int64_t delta_a, std::int64_t delta_b) {
    std::int64_t mx_before = count_[i].mx();
    count_[i].a += delta_a;
    count_[i].b += delta_b;
    total_a_ += delta_a;
    total_b_ += delta_b;
    std::int64_t mx_delta = count_[i].mx() - mx_before;
    if (mx_delta != 0) {
      Coord x = unpack_site(key_of_[i], d_);
      for (const Coord& y : neighbors(x, d_)) {
        std::uint32_t j = ensure(pack_site(y, d_));
        nbr_mx_[j] += mx_delta;
        refresh(j);
      }
    }
    refresh(i);
  }

  // Picks the infection source among the neighbors of target proportionally
  // to max(a, b), in the deterministic lexicographic neighbor order.
  std::uint32_t pick_source(std::uint32_t target, Rng& rng) {
    std::uint64_t r = rng.below(static_cast<std::uint64_t>(nbr_mx_[target]));
    Coord x = unpack_site(key_of_[target], d_);
    for (const Coord& y : neighbors(x, d_)) {
      auto it = index_of_.find(pack_site(y, d_));
      if (it == index_of_.end()) continue;
      std::uint64_t w = static_cast<std::uint64_t>(count_[it->second].mx());
      if (r < w) return it->second;
      r -= w;
    }
    throw Error(ErrorCode::InvalidArgument, "source pick out of range");
  }

  Fire outside_ring(Rng& rng, bool into_healthy) {
    const WeightedIndex& bit = into_healthy ? wa_ : wb_;
    std::uint32_t target =
        static_cast<std::uint32_t>(bit.sample(rng.below(bit.total())));
    std::uint32_t source = pick_source(target, rng);
    std::int64_t level =
        1 + static_cast<std::int64_t>(
                rng.below(static_cast<std::uint64_t>(count_[source].mx())));
    double coin = rng.uniform01();
    const double top = into_healthy ? lambda_max_ : beta_max_;
    const double rate_a = into_healthy ? pa_.lambda : pa_.beta;
    const double rate_b = into_healthy ? pb_.lambda : pb_.beta;
    bool target_ok_a =
        into_healthy ? (count_[target].a == 0) : elig_more_a(target);
    bool target_ok_b =
        into_healthy ? (count_[target].b == 0) : elig_more_b(target);
    bool fire_a = target_ok_a && level <= count_[source].a && coin * top < rate_a;
    bool fire_b = target_ok_b && level <= count_[source].b && coin * top < rate_b;
    if (!fire_a && !fire_b) return {};
    apply(target, fire_a ? 1 : 0, fire_b ? 1 : 0);
    return {true, target};
  }

  Fire within_ring(Rng& rng) {
    std::uint32_t site =
        static_cast<std::uint32_t>(wc_.sample(rng.below(wc_.total())));
    std::int64_t level =
        1 + static_cast<std::int64_t>(rng.below(weight_c(site)));
    double coin = rng.uniform01();
    bool fire_a = level <= level_cap_a(site) && coin * phi_max_ < pa_.phi;
    bool fire_b = level <= level_cap_b(site) && coin * phi_max_ < pb_.phi;
    if (!fire_a && !fire_b) return {};
    apply(site, fire_a ? 1 : 0, fire_b ? 1 : 0);
    return {true, site};
  }

  Fire recovery_ring(Rng& rng) {
    std::uint32_t site =
        static_cast<std::uint32_t>(wd_.sample(rng.below(wd_.total())));
    if (individual_) {
      std::int64_t level =
          1 + static_cast<std::int64_t>(
                  rng.below(static_cast<std::uint64_t>(count_[site].mx())));
      bool fire_a = level <= count_[site].a;
      bool fire_b = level <= count_[site].b;
      if (!fire_a && !fire_b) return {};
      apply(site, fire_a ? -1 : 0, fire_b ? -1 : 0);
      return {true, site};
    }
    apply(site, -count_[site].a, -count_[site].b);
    return {true, site};
  }

  const ModelParams& pa_;
  const ModelParams& pb_;
  const int d_;
  const bool individual_;
  const double lambda_max_, beta_max_, phi_max_;
  const std::int64_t cap_a_, cap_b_;
  std::unordered_map<SiteKey, std::uint32_t> index_of_;
  std::vector<SiteKey> key_of_;
  std::vector<PairCount> count_;
  std::vector<std::int64_t> nbr_mx_;
  WeightedIndex wa_, wb_, wc_, wd_;
  std::int64_t total_a_ = 0, total_b_ = 0;
};

}  // namespace

CoupledTrajectory coupled_simulate(const CoupledPair& pair,
                                   const CoupledSimulateOptions& options) {
  pair.validate();
  CoupledEngine engine(pair);
  Rng rng(options.seed);
  CoupledTrajectory out;
  out.ordered = pair.ordered;
  out.initial = engine.sorted_pairs();

  double t = 0.0;
  while (engine.total_a() > 0 || engine.total_b() > 0) {
    const double rate = engine.total_rate();
    if (rate <= 0.0) break;
    const double dt = rng.exponential(rate);
    if (t + dt > options.horizon) {
      t = options.horizon;
      break;
    }
    t += dt;
    auto fire = engine.ring(rng);
    ++out.rings;
    if (fire.changed && options.record_events) {
      PairCount pc = engine.counts_at(fire.site);
      out.events.push_back(
          {t, unpack_site(engine.key_of(fire.site), pair.params_a.d), pc.a, pc.b});
    }
    if (out.rings >= options.event_budget) {
      out.truncated = true;
      break;
    }
  }
  if (!out.truncated && (engine.total_a() > 0 || engine.total_b() > 0)) {
    t = options.horizon;
  } else if (engine.total_a() == 0 && engine.total_b() == 0) {
    t = options.horizon;
  }
  out.final_time = t;
  for (const auto& [coord, a, b] : engine.sorted_pairs()) {
    if (a > 0) out.final_a.set(coord, pair.params_a.d, a);
    if (b > 0) out.final_b.set(coord, pair.params_a.d, b);
  }
  return out;
}

OrderingCheckResult ordering_check(const CoupledTrajectory& trajectory,
                                   DominationKind kind) {
  auto dominates = [&](std::int64_t a, std::int64_t b) {
    if (kind == DominationKind::Counts) return a >= b;
    return (a > 0) >= (b > 0);
  };
  OrderingCheckResult out;
  for (const auto& [coord, a, b] : trajectory.initial) {
    if (!dominates(a, b)) {
      out.ok = false;
      out.t = 0.0;
      out.site = coord;
      out.initial_violation = true;
      return out;
    }
  }
  for (std::size_t i = 0; i < trajectory.events.size(); ++i) {
    const CoupledEvent& event = trajectory.events[i];
    if (!dominates(event.a_after, event.b_after)) {
      out.ok = false;
      out.t = event.t;
      out.site = event.site;
      out.event_index = i;
      return out;
    }
  }
  return out;
}

CoupledTrajectory dominate_contact(const ModelParams& params,
                                   const ClusterConfig& config0,
                                   const CoupledSimulateOptions& options) {
  CoupledPair pair;
  pair.params_a = params;
  pair.params_b = params;
  pair.params_b.beta = 0.0;
  pair.params_b.phi = 0.0;
  pair.params_b.kappa_cap = 1;
  pair.config_a = config0;
  for (const auto& [key, count] : config0.counts) {
    if (count > 0) pair.config_b.counts[key] = 1;
  }
  pair.ordered = true;
  return coupled_simulate(pair, options);
}

}  // namespace episim
