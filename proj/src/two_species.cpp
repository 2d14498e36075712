#include "two_species.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "errors.hpp"
#include "weighted_index.hpp"

namespace episim {

namespace {

// Tripwires far above any regime the cubic death rates allow: per-site
// counts at the guard give channel weights near 2^57, and the total-particle
// guard keeps the summed weights inside the 64-bit range.
constexpr std::int64_t kCountGuard = 20'000;
constexpr std::int64_t kTotalGuard = 1'000'000;

constexpr std::size_t kChannels = 10;

enum Channel : std::size_t {
  kBirth1 = 0,
  kDeath1,
  kBirth2,
  kDeath2,
  kRecovery,
  kWithin,
  kOutsideNew,
  kOutsideMore,
  kDiffEta,
  kDiffXi,
};

}  // namespace

void TwoSpeciesParams::validate() const {
  rates.validate();
  require(N >= 2, ErrorCode::InvalidArgument, "torus size N must be >= 2");
}

std::int64_t TwoSpeciesConfig::total_eta() const {
  std::int64_t sum = 0;
  for (auto v : eta) sum += v;
  return sum;
}

std::int64_t TwoSpeciesConfig::total_xi() const {
  std::int64_t sum = 0;
  for (auto v : xi) sum += v;
  return sum;
}

TwoSpeciesConfig TwoSpeciesConfig::zeros(std::size_t n) {
  TwoSpeciesConfig c;
  c.eta.assign(n, 0);
  c.xi.assign(n, 0);
  return c;
}

TwoSpeciesConfig TwoSpeciesConfig::poisson_init(const Profile& m1,
                                                const Profile& m2,
                                                std::uint64_t seed) {
  SampledPair pair = sample_product_poisson(m1, m2, seed);
  TwoSpeciesConfig c;
  c.eta = std::move(pair.eta);
  c.xi = std::move(pair.xi);
  return c;
}

void TwoSpeciesConfig::validate() const {
  require(eta.size() == xi.size(), ErrorCode::InvalidArgument,
          "eta and xi must have equal length");
  for (std::size_t i = 0; i < eta.size(); ++i) {
    require(eta[i] >= 0 && xi[i] >= 0, ErrorCode::InvalidArgument,
            "counts must be >= 0");
  }
}

namespace {

std::int64_t neighbor_xi_sum(const TwoSpeciesConfig& config, std::size_t x) {
  const std::size_t n = config.size();
  return config.xi[(x + n - 1) % n] + config.xi[(x + 1) % n];
}

}  // namespace

std::vector<TsEvent> reaction_rates(const TwoSpeciesConfig& config,
                                    std::size_t x,
                                    const TwoSpeciesParams& params) {
  params.validate();
  config.validate();
  const auto& p = params.rates;
  const double eta = static_cast<double>(config.eta[x]);
  const double xi = static_cast<double>(config.xi[x]);
  const double s = static_cast<double>(neighbor_xi_sum(config, x));

  std::vector<TsEvent> events;
  events.push_back({TsEventKind::Birth1, p.alpha1 * (eta + xi)});
  if (config.eta[x] > 0) {
    events.push_back({TsEventKind::Death1,
                      p.kappa_death * eta * eta * (eta + xi * xi)});
  }
  events.push_back({TsEventKind::Birth2, p.alpha2 * (eta + xi)});
  if (config.xi[x] > 0) {
    events.push_back({TsEventKind::Death2,
                      p.kappa_death * xi * xi * (eta * eta + xi)});
  }
  if (config.xi[x] > 0) {
    events.push_back({TsEventKind::Recovery, p.recovery_rate * xi});
  }
  if (config.eta[x] > 0) {
    events.push_back({TsEventKind::WithinInfect, p.phi * xi});
    if (config.xi[x] == 0) {
      events.push_back({TsEventKind::OutsideNew, p.lambda * s});
    } else {
      events.push_back({TsEventKind::OutsideMore, p.beta * s});
    }
  }
  return events;
}

std::vector<TsEvent> diffusion_rates(const TwoSpeciesConfig& config,
                                     std::size_t x,
                                     const TwoSpeciesParams& params) {
  params.validate();
  config.validate();
  const double half_rate =
      0.5 * static_cast<double>(params.N) * static_cast<double>(params.N);
  std::vector<TsEvent> events;
  if (config.eta[x] > 0) {
    const double r = half_rate * static_cast<double>(config.eta[x]);
    events.push_back({TsEventKind::JumpEtaLeft, r});
    events.push_back({TsEventKind::JumpEtaRight, r});
  }
  if (config.xi[x] > 0) {
    const double r = half_rate * static_cast<double>(config.xi[x]);
    events.push_back({TsEventKind::JumpXiLeft, r});
    events.push_back({TsEventKind::JumpXiRight, r});
  }
  return events;
}

namespace {

// Integer channel weights; the scalar multipliers carry the real-valued
// parameters so all Fenwick bookkeeping stays exact.
struct ChannelSpec {
  double mult[kChannels];
};

std::uint64_t channel_weight(std::size_t ch, std::int64_t eta, std::int64_t xi,
                             std::int64_t s, const ChannelSpec& spec) {
  if (spec.mult[ch] <= 0.0) return 0;
  switch (ch) {
    case kBirth1:
    case kBirth2:
      return static_cast<std::uint64_t>(eta + xi);
    case kDeath1:
      return static_cast<std::uint64_t>(eta) * static_cast<std::uint64_t>(eta) *
             static_cast<std::uint64_t>(eta + xi * xi);
    case kDeath2:
      return static_cast<std::uint64_t>(xi) * static_cast<std::uint64_t>(xi) *
             static_cast<std::uint64_t>(eta * eta + xi);
    case kRecovery:
      return static_cast<std::uint64_t>(xi);
    case kWithin:
      return eta > 0 ? static_cast<std::uint64_t>(xi) : 0;
    case kOutsideNew:
      return (eta > 0 && xi == 0) ? static_cast<std::uint64_t>(s) : 0;
    case kOutsideMore:
      return (eta > 0 && xi > 0) ? static_cast<std::uint64_t>(s) : 0;
    case kDiffEta:
      return static_cast<std::uint64_t>(eta);
    default:
      return static_cast<std::uint64_t>(xi);
  }
}

class TorusEngine {
 public:
  TorusEngine(const TwoSpeciesConfig& config0, const TwoSpeciesParams& params)
      : params_(params), n_(config0.size()), config_(config0) {
    const double n2 = static_cast<double>(params.N) * static_cast<double>(params.N);
    spec_.mult[kBirth1] = params.rates.alpha1;
    spec_.mult[kDeath1] = params.rates.kappa_death;
    spec_.mult[kBirth2] = params.rates.alpha2;
    spec_.mult[kDeath2] = params.rates.kappa_death;
    spec_.mult[kRecovery] = params.rates.recovery_rate;
    spec_.mult[kWithin] = params.rates.phi;
    spec_.mult[kOutsideNew] = params.rates.lambda;
    spec_.mult[kOutsideMore] = params.rates.beta;
    spec_.mult[kDiffEta] = n2;
    spec_.mult[kDiffXi] = n2;
    for (std::size_t ch = 0; ch < kChannels; ++ch) {
      for (std::size_t i = 0; i < n_; ++i) bits_[ch].push_back();
    }
    for (std::size_t i = 0; i < n_; ++i) {
      require(config_.eta[i] <= kCountGuard && config_.xi[i] <= kCountGuard,
              ErrorCode::CountOverflow, "initial count out of range");
      total_particles_ += config_.eta[i] + config_.xi[i];
      refresh(i);
    }
    require(total_particles_ <= kTotalGuard, ErrorCode::CountOverflow,
            "initial particle total out of range");
  }

  double total_rate() const {
    double total = 0.0;
    for (std::size_t ch = 0; ch < kChannels; ++ch) {
      total += spec_.mult[ch] * static_cast<double>(bits_[ch].total());
    }
    return total;
  }

  const TwoSpeciesConfig& config() const { return config_; }

  TsEventRecord step(Rng& rng, double t) {
    double rates[kChannels];
    double total = 0.0;
    for (std::size_t ch = 0; ch < kChannels; ++ch) {
      rates[ch] = spec_.mult[ch] * static_cast<double>(bits_[ch].total());
      total += rates[ch];
    }
    double u = rng.uniform01() * total;
    std::size_t channel = kChannels;
    double acc = 0.0;
    for (std::size_t ch = 0; ch < kChannels; ++ch) {
      if (rates[ch] <= 0.0) continue;
      acc += rates[ch];
      channel = ch;
      if (u < acc) break;
    }
    require(channel < kChannels, ErrorCode::InvalidArgument, "no active channel");

    const std::size_t site =
        bits_[channel].sample(rng.below(bits_[channel].total()));
    std::size_t target = site;
    TsEventKind kind;
    switch (channel) {
      case kBirth1:
        kind = TsEventKind::Birth1;
        bump_eta(site, +1);
        break;
      case kDeath1:
        kind = TsEventKind::Death1;
        bump_eta(site, -1);
        break;
      case kBirth2:
        kind = TsEventKind::Birth2;
        bump_xi(site, +1);
        break;
      case kDeath2:
        kind = TsEventKind::Death2;
        bump_xi(site, -1);
        break;
      case kRecovery:
        kind = TsEventKind::Recovery;
        bump_eta(site, +1);
        bump_xi(site, -1);
        break;
      case kWithin:
        kind = TsEventKind::WithinInfect;
        bump_eta(site, -1);
        bump_xi(site, +1);
        break;
      case kOutsideNew:
        kind = TsEventKind::OutsideNew;
        bump_eta(site, -1);
        bump_xi(site, +1);
        break;
      case kOutsideMore:
        kind = TsEventKind::OutsideMore;
        bump_eta(site, -1);
        bump_xi(site, +1);
        break;
      case kDiffEta: {
        target = rng.bernoulli(0.5) ? (site + 1) % n_ : (site + n_ - 1) % n_;
        kind = target == (site + 1) % n_ ? TsEventKind::JumpEtaRight
                                         : TsEventKind::JumpEtaLeft;
        bump_eta(site, -1);
        bump_eta(target, +1);
        break;
      }
      default: {
        target = rng.bernoulli(0.5) ? (site + 1) % n_ : (site + n_ - 1) % n_;
        kind = target == (site + 1) % n_ ? TsEventKind::JumpXiRight
                                         : TsEventKind::JumpXiLeft;
        bump_xi(site, -1);
        bump_xi(target, +1);
        break;
      }
    }
    flush_touched();
    return {t, kind, static_cast<std::int32_t>(site),
            static_cast<std::int32_t>(target)};
  }

  void check_totals() const {
    for (std::size_t ch = 0; ch < kChannels; ++ch) {
      std::uint64_t sum = 0;
      for (std::size_t i = 0; i < n_; ++i) {
        sum += channel_weight(ch, config_.eta[i], config_.xi[i],
                              neighbor_xi_sum(config_, i), spec_);
      }
      require(sum == bits_[ch].total(), ErrorCode::InvalidArgument,
              "channel total drifted from recomputation");
    }
  }

 private:
  void bump_eta(std::size_t x, std::int64_t delta) {
    config_.eta[x] += delta;
    total_particles_ += delta;
    require(config_.eta[x] >= 0 && config_.eta[x] <= kCountGuard &&
                total_particles_ <= kTotalGuard,
            ErrorCode::CountOverflow, "eta count out of range");
    touch(x);
  }

  void bump_xi(std::size_t x, std::int64_t delta) {
    config_.xi[x] += delta;
    total_particles_ += delta;
    require(config_.xi[x] >= 0 && config_.xi[x] <= kCountGuard &&
                total_particles_ <= kTotalGuard,
            ErrorCode::CountOverflow, "xi count out of range");
    touch(x);
    touch((x + 1) % n_);
    touch((x + n_ - 1) % n_);
  }

  void touch(std::size_t x) {
    if (std::find(touched_.begin(), touched_.end(), x) == touched_.end()) {
      touched_.push_back(x);
    }
  }

  void flush_touched() {
    for (std::size_t x : touched_) refresh(x);
    touched_.clear();
  }

  void refresh(std::size_t x) {
    const std::int64_t eta = config_.eta[x];
    const std::int64_t xi = config_.xi[x];
    const std::int64_t s = neighbor_xi_sum(config_, x);
    for (std::size_t ch = 0; ch < kChannels; ++ch) {
      bits_[ch].set(x, channel_weight(ch, eta, xi, s, spec_));
    }
  }

  const TwoSpeciesParams& params_;
  const std::size_t n_;
  TwoSpeciesConfig config_;
  ChannelSpec spec_;
  WeightedIndex bits_[kChannels];
  std::vector<std::size_t> touched_;
  std::int64_t total_particles_ = 0;
};

}  // namespace

namespace {

// Crude tau-leap stepping: channel counts ~ Poisson(rate * dt) at rates
// frozen at the step start, all applied at once, negative results clamped.
TsTrajectory tau_leap_run(const TwoSpeciesConfig& config0,
                          const TwoSpeciesParams& params,
                          const TsSimOptions& options) {
  TwoSpeciesConfig state = config0;
  const std::size_t n = state.size();
  const auto& p = params.rates;
  const double half_jump =
      0.5 * static_cast<double>(params.N) * static_cast<double>(params.N);
  Rng rng(options.seed);
  TsTrajectory out;
  double t = 0.0;
  std::size_t next_snap = 0;

  auto emit_until = [&](double time) {
    while (next_snap < options.snapshot_times.size() &&
           options.snapshot_times[next_snap] <= time + 1e-12) {
      out.snapshots.push_back({options.snapshot_times[next_snap], state});
      ++next_snap;
    }
  };
  emit_until(0.0);

  std::vector<std::int64_t> d_eta(n), d_xi(n);
  while (t < options.horizon - 1e-12 && !out.truncated) {
    double dt = std::min(options.tau, options.horizon - t);
    if (next_snap < options.snapshot_times.size()) {
      dt = std::min(dt, options.snapshot_times[next_snap] - t);
    }
    if (dt <= 0.0) dt = options.tau;
    std::fill(d_eta.begin(), d_eta.end(), 0);
    std::fill(d_xi.begin(), d_xi.end(), 0);
    for (std::size_t x = 0; x < n; ++x) {
      const double eta = static_cast<double>(state.eta[x]);
      const double xi = static_cast<double>(state.xi[x]);
      const double s = static_cast<double>(neighbor_xi_sum(state, x));
      auto draw = [&](double rate) -> std::int64_t {
        if (rate <= 0.0) return 0;
        return static_cast<std::int64_t>(rng.poisson(rate * dt));
      };
      const std::size_t l = (x + n - 1) % n, r = (x + 1) % n;
      std::int64_t count;
      count = draw(p.alpha1 * (eta + xi));
      d_eta[x] += count;
      out.event_count += count;
      count = draw(p.kappa_death * eta * eta * (eta + xi * xi));
      d_eta[x] -= count;
      out.event_count += count;
      count = draw(p.alpha2 * (eta + xi));
      d_xi[x] += count;
      out.event_count += count;
      count = draw(p.kappa_death * xi * xi * (eta * eta + xi));
      d_xi[x] -= count;
      out.event_count += count;
      count = draw(p.recovery_rate * xi);
      d_eta[x] += count;
      d_xi[x] -= count;
      out.event_count += count;
      double infect = state.eta[x] > 0
                          ? p.phi * xi + (state.xi[x] == 0 ? p.lambda : p.beta) * s
                          : 0.0;
      count = draw(infect);
      d_eta[x] -= count;
      d_xi[x] += count;
      out.event_count += count;
      count = draw(half_jump * eta);  // healthy left
      d_eta[x] -= count;
      d_eta[l] += count;
      out.event_count += count;
      count = draw(half_jump * eta);  // healthy right
      d_eta[x] -= count;
      d_eta[r] += count;
      out.event_count += count;
      count = draw(half_jump * xi);
      d_xi[x] -= count;
      d_xi[l] += count;
      out.event_count += count;
      count = draw(half_jump * xi);
      d_xi[x] -= count;
      d_xi[r] += count;
      out.event_count += count;
    }
    for (std::size_t x = 0; x < n; ++x) {
      state.eta[x] += d_eta[x];
      state.xi[x] += d_xi[x];
      if (state.eta[x] < 0) {
        state.eta[x] = 0;
        ++out.tau_clamped;
      }
      if (state.xi[x] < 0) {
        state.xi[x] = 0;
        ++out.tau_clamped;
      }
    }
    t += dt;
    emit_until(t);
    if (out.event_count >= options.event_budget) out.truncated = true;
  }
  out.final_time = out.truncated ? t : options.horizon;
  emit_until(out.final_time);
  out.final_config = state;
  return out;
}

}  // namespace

TsTrajectory simulate_torus(const TwoSpeciesConfig& config0,
                            const TwoSpeciesParams& params,
                            const TsSimOptions& options) {
  params.validate();
  config0.validate();
  require(config0.size() == static_cast<std::size_t>(params.N),
          ErrorCode::InvalidArgument, "config length must equal N");
  require(std::is_sorted(options.snapshot_times.begin(),
                         options.snapshot_times.end()),
          ErrorCode::InvalidArgument, "snapshot times must be ascending");
  if (options.tau > 0.0) return tau_leap_run(config0, params, options);

  TorusEngine engine(config0, params);
  Rng rng(options.seed);
  TsTrajectory out;
  double t = 0.0;
  std::size_t next_snap = 0;

  auto emit_snapshots_until = [&](double time) {
    while (next_snap < options.snapshot_times.size() &&
           options.snapshot_times[next_snap] <= time) {
      out.snapshots.push_back({options.snapshot_times[next_snap], engine.config()});
      ++next_snap;
    }
  };
  emit_snapshots_until(0.0);

  for (;;) {
    const double rate = engine.total_rate();
    if (rate <= 0.0) break;
    const double dt = rng.exponential(rate);
    if (t + dt > options.horizon) break;
    t += dt;
    emit_snapshots_until(std::nextafter(t, 0.0));
    TsEventRecord record = engine.step(rng, t);
    ++out.event_count;
    if (options.record_events) out.events.push_back(record);
    if (options.paranoid_checks) engine.check_totals();
    if (out.event_count >= options.event_budget) {
      out.truncated = true;
      break;
    }
  }
  out.final_time = out.truncated ? t : options.horizon;
  emit_snapshots_until(out.final_time);
  out.final_config = engine.config();
  return out;
}

Observable Observable::from_function(const std::string& id, std::size_t n,
                                     const std::function<double(double)>& g) {
  Observable out;
  out.id = id;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.values[i] = g(static_cast<double>(i) / static_cast<double>(n));
  }
  return out;
}

PairingValue empirical_pairing(const TwoSpeciesConfig& config,
                               const Observable& g) {
  require(g.values.size() == config.size(), ErrorCode::InvalidArgument,
          "observable grid must match the configuration");
  PairingValue out;
  const double n = static_cast<double>(config.size());
  for (std::size_t i = 0; i < config.size(); ++i) {
    out.eta += static_cast<double>(config.eta[i]) * g.values[i];
    out.xi += static_cast<double>(config.xi[i]) * g.values[i];
  }
  out.eta /= n;
  out.xi /= n;
  return out;
}

// ---------------------------------------------------------------------------
// SiteStreamSimulator

SiteStreamSimulator::SiteStreamSimulator(
    std::int64_t half, const TwoSpeciesParams& params,
    const std::function<double(double)>& m1,
    const std::function<double(double)>& m2, std::uint64_t master_seed,
    std::uint64_t replica)
    : params_(params), half_(half), n_(static_cast<std::size_t>(2 * half + 1)) {
  params_.validate();
  require(half >= 1, ErrorCode::InvalidArgument, "torus half-width must be >= 1");
  eta_.resize(n_);
  xi_.resize(n_);
  rate_.assign(n_, 0.0);
  next_t_.assign(n_, std::numeric_limits<double>::infinity());
  stream_.reserve(n_);
  const double n_scale = static_cast<double>(params_.N);
  for (std::size_t i = 0; i < n_; ++i) {
    std::int64_t coordinate = static_cast<std::int64_t>(i) - half_;
    stream_.emplace_back(derive_seed(master_seed, replica,
                                     static_cast<std::uint64_t>(coordinate + (1LL << 40))));
    const double theta = static_cast<double>(coordinate) / n_scale;
    eta_[i] = static_cast<std::int64_t>(stream_[i].poisson(std::max(m1(theta), 0.0)));
    xi_[i] = static_cast<std::int64_t>(stream_[i].poisson(std::max(m2(theta), 0.0)));
  }
  heap_.resize(n_);
  pos_.resize(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    rate_[i] = site_rate(i);
    next_t_[i] = rate_[i] > 0.0
                     ? stream_[i].exponential(rate_[i])
                     : std::numeric_limits<double>::infinity();
    heap_[i] = i;
    pos_[i] = i;
  }
  for (std::size_t slot = n_; slot-- > 0;) heap_sift_down(slot);
}

std::size_t SiteStreamSimulator::index_of(std::int64_t coordinate) const {
  std::int64_t span = static_cast<std::int64_t>(n_);
  std::int64_t i = (coordinate + half_) % span;
  if (i < 0) i += span;
  return static_cast<std::size_t>(i);
}

void SiteStreamSimulator::channel_rates(std::size_t i,
                                        double rates[kChannels]) const {
  const auto& p = params_.rates;
  const double eta = static_cast<double>(eta_[i]);
  const double xi = static_cast<double>(xi_[i]);
  const double s =
      static_cast<double>(xi_[(i + 1) % n_] + xi_[(i + n_ - 1) % n_]);
  const double n2 =
      static_cast<double>(params_.N) * static_cast<double>(params_.N);
  rates[kBirth1] = p.alpha1 * (eta + xi);
  rates[kDeath1] = p.kappa_death * eta * eta * (eta + xi * xi);
  rates[kBirth2] = p.alpha2 * (eta + xi);
  rates[kDeath2] = p.kappa_death * xi * xi * (eta * eta + xi);
  rates[kRecovery] = p.recovery_rate * xi;
  rates[kWithin] = eta_[i] > 0 ? p.phi * xi : 0.0;
  rates[kOutsideNew] = (eta_[i] > 0 && xi_[i] == 0) ? p.lambda * s : 0.0;
  rates[kOutsideMore] = (eta_[i] > 0 && xi_[i] > 0) ? p.beta * s : 0.0;
  rates[kDiffEta] = n2 * eta;
  rates[kDiffXi] = n2 * xi;
}

// Summed in channel order, so the scheduled intensity is bit-identical to
// the selection normalizer in fire().
double SiteStreamSimulator::site_rate(std::size_t i) const {
  double rates[kChannels];
  channel_rates(i, rates);
  double total = 0.0;
  for (std::size_t ch = 0; ch < kChannels; ++ch) total += rates[ch];
  return total;
}

bool SiteStreamSimulator::heap_less(std::size_t a, std::size_t b) const {
  if (next_t_[a] != next_t_[b]) return next_t_[a] < next_t_[b];
  return a < b;
}

void SiteStreamSimulator::heap_sift_up(std::size_t slot) {
  while (slot > 0) {
    std::size_t parent = (slot - 1) / 2;
    if (!heap_less(heap_[slot], heap_[parent])) break;
    std::swap(heap_[slot], heap_[parent]);
    pos_[heap_[slot]] = slot;
    pos_[heap_[parent]] = parent;
    slot = parent;
  }
}

void SiteStreamSimulator::heap_sift_down(std::size_t slot) {
  for (;;) {
    std::size_t left = 2 * slot + 1;
    std::size_t right = left + 1;
    std::size_t best = slot;
    if (left < n_ && heap_less(heap_[left], heap_[best])) best = left;
    if (right < n_ && heap_less(heap_[right], heap_[best])) best = right;
    if (best == slot) return;
    std::swap(heap_[slot], heap_[best]);
    pos_[heap_[slot]] = slot;
    pos_[heap_[best]] = best;
    slot = best;
  }
}

void SiteStreamSimulator::heap_update(std::size_t site) {
  std::size_t slot = pos_[site];
  heap_sift_up(slot);
  heap_sift_down(pos_[site]);
}

void SiteStreamSimulator::reschedule(std::size_t i, bool fresh) {
  const double old_rate = rate_[i];
  const double new_rate = site_rate(i);
  if (fresh) {
    next_t_[i] = new_rate > 0.0 ? now_ + stream_[i].exponential(new_rate)
                                : std::numeric_limits<double>::infinity();
  } else if (new_rate <= 0.0) {
    next_t_[i] = std::numeric_limits<double>::infinity();
  } else if (old_rate <= 0.0 || std::isinf(next_t_[i])) {
    next_t_[i] = now_ + stream_[i].exponential(new_rate);
  } else {
    next_t_[i] = now_ + (next_t_[i] - now_) * (old_rate / new_rate);
  }
  rate_[i] = new_rate;
  heap_update(i);
}

void SiteStreamSimulator::fire(std::size_t i) {
  Rng& stream = stream_[i];
  double rates[kChannels];
  channel_rates(i, rates);
  double total = 0.0;
  for (double r : rates) total += r;
  double u = stream.uniform01() * total;
  std::size_t channel = kChannels;
  double acc = 0.0;
  for (std::size_t ch = 0; ch < kChannels; ++ch) {
    if (rates[ch] <= 0.0) continue;
    acc += rates[ch];
    channel = ch;
    if (u < acc) break;
  }
  require(channel < kChannels, ErrorCode::InvalidArgument, "no active channel");

  const std::size_t left = (i + n_ - 1) % n_;
  const std::size_t right = (i + 1) % n_;
  bool xi_changed = false;
  std::size_t jump_target = i;
  switch (channel) {
    case kBirth1:
      ++eta_[i];
      break;
    case kDeath1:
      --eta_[i];
      break;
    case kBirth2:
      ++xi_[i];
      xi_changed = true;
      break;
    case kDeath2:
      --xi_[i];
      xi_changed = true;
      break;
    case kRecovery:
      ++eta_[i];
      --xi_[i];
      xi_changed = true;
      break;
    case kWithin:
    case kOutsideNew:
    case kOutsideMore:
      --eta_[i];
      ++xi_[i];
      xi_changed = true;
      break;
    case kDiffEta:
      jump_target = stream.bernoulli(0.5) ? right : left;
      --eta_[i];
      ++eta_[jump_target];
      break;
    default:
      jump_target = stream.bernoulli(0.5) ? right : left;
      --xi_[i];
      ++xi_[jump_target];
      xi_changed = true;
      break;
  }
  require(eta_[i] >= 0 && xi_[i] >= 0 && eta_[i] <= kCountGuard &&
              xi_[i] <= kCountGuard,
          ErrorCode::CountOverflow, "count out of range");

  // The fired site redraws; affected neighbors rescale (fresh draws only on
  // zero-rate transitions, which keeps the runs aligned away from changes).
  std::vector<std::size_t> affected;
  affected.push_back(i);
  auto add = [&](std::size_t j) {
    if (std::find(affected.begin(), affected.end(), j) == affected.end()) {
      affected.push_back(j);
    }
  };
  if (xi_changed) {
    add(left);
    add(right);
  }
  if (jump_target != i) {
    add(jump_target);
    if (xi_changed) {
      add((jump_target + 1) % n_);
      add((jump_target + n_ - 1) % n_);
    }
  }
  for (std::size_t j : affected) reschedule(j, /*fresh=*/j == i);
}

void SiteStreamSimulator::run_to(double t_end) {
  for (;;) {
    std::size_t top = heap_[0];
    double t = next_t_[top];
    if (t > t_end || std::isinf(t)) break;
    now_ = t;
    fire(top);
    ++events_;
  }
  now_ = t_end;
}

std::int64_t SiteStreamSimulator::eta_at(std::int64_t coordinate) const {
  return eta_[index_of(coordinate)];
}

std::int64_t SiteStreamSimulator::xi_at(std::int64_t coordinate) const {
  return xi_[index_of(coordinate)];
}

}  // namespace episim
