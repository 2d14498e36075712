#include "poisson_measures.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace episim {

Profile Profile::constant(std::size_t n, double level) {
  Profile p;
  p.values.assign(n, level);
  p.apply_floor();
  return p;
}

Profile Profile::from_function(std::size_t n,
                               const std::function<double(double)>& f) {
  Profile p;
  p.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.values[i] = f(static_cast<double>(i) / static_cast<double>(n));
  }
  p.apply_floor();
  return p;
}

void Profile::apply_floor() {
  for (double& v : values) {
    require(v >= 0.0 && std::isfinite(v), ErrorCode::InvalidArgument,
            "profile values must be finite and >= 0");
    v = std::max(v, kFloor);
  }
}

void TildeParams::validate() const {
  require(alpha1 >= 0.0 && alpha2 >= 0.0 && kappa_death >= 0.0 &&
              lambda >= 0.0 && beta >= 0.0 && phi >= 0.0 &&
              recovery_rate >= 0.0,
          ErrorCode::InvalidArgument, "tilde parameters must be >= 0");
}

TildeRates tilde_rates(double a, double b, const TildeParams& params) {
  params.validate();
  require(a >= 0.0 && b >= 0.0, ErrorCode::InvalidArgument,
          "intensities must be >= 0");
  const double m2a = a * a + a;
  const double m2b = b * b + b;
  const double m3a = a * a * a + 3.0 * a * a + a;
  const double m3b = b * b * b + 3.0 * b * b + b;
  const double occ_a = 1.0 - std::exp(-a);  // P(eta > 0)
  const double empty_b = std::exp(-b);      // P(xi = 0)

  TildeRates out;
  out.beta1 = params.alpha1 * (a + b);
  out.beta2 = params.alpha2 * (a + b);
  out.delta1 = params.kappa_death * (m3a + m2a * m2b);
  out.delta2 = params.kappa_death * (m2a * m2b + m3b);
  out.g = b * (params.recovery_rate - params.phi * occ_a) -
          2.0 * b * occ_a * (params.lambda * empty_b +
                             params.beta * (1.0 - empty_b));
  return out;
}

SampledPair sample_product_poisson(const Profile& profile1,
                                   const Profile& profile2,
                                   std::uint64_t seed) {
  require(profile1.size() == profile2.size(), ErrorCode::InvalidArgument,
          "profiles must have equal length");
  Rng rng(seed);
  SampledPair out;
  out.eta.resize(profile1.size());
  out.xi.resize(profile1.size());
  for (std::size_t i = 0; i < profile1.size(); ++i) {
    out.eta[i] = static_cast<std::int64_t>(rng.poisson(profile1.at(i)));
    out.xi[i] = static_cast<std::int64_t>(rng.poisson(profile2.at(i)));
  }
  return out;
}

McEstimate tilde_mc(const std::function<double(const CylinderDraw&)>& h,
                    double a, double b, std::uint64_t samples,
                    std::uint64_t seed) {
  require(samples >= 1, ErrorCode::InvalidArgument, "samples must be >= 1");
  Rng rng(seed);
  double sum = 0.0, sum_sq = 0.0;
  for (std::uint64_t s = 0; s < samples; ++s) {
    CylinderDraw draw;
    draw.eta = static_cast<std::int64_t>(rng.poisson(a));
    draw.xi = static_cast<std::int64_t>(rng.poisson(b));
    draw.xi_left = static_cast<std::int64_t>(rng.poisson(b));
    draw.xi_right = static_cast<std::int64_t>(rng.poisson(b));
    double v = h(draw);
    sum += v;
    sum_sq += v * v;
  }
  McEstimate out;
  out.samples = samples;
  const double n = static_cast<double>(samples);
  out.mean = sum / n;
  if (samples > 1) {
    double var = std::max(0.0, (sum_sq - n * out.mean * out.mean) / (n - 1.0));
    out.stderr_ = std::sqrt(var / n);
  }
  return out;
}

TildeMcTable tilde_rates_mc(double a, double b, const TildeParams& params,
                            std::uint64_t samples, std::uint64_t seed) {
  params.validate();
  // All five rates on shared draws: one pass, five accumulators.
  Rng rng(seed);
  double sum[5] = {0, 0, 0, 0, 0};
  double sq[5] = {0, 0, 0, 0, 0};
  for (std::uint64_t s = 0; s < samples; ++s) {
    const double eta = static_cast<double>(rng.poisson(a));
    const double xi = static_cast<double>(rng.poisson(b));
    const double xi_l = static_cast<double>(rng.poisson(b));
    const double xi_r = static_cast<double>(rng.poisson(b));
    const double nsum = xi_l + xi_r;
    const double occupied = eta > 0.0 ? 1.0 : 0.0;
    const double v[5] = {
        params.alpha1 * (eta + xi),
        params.kappa_death * eta * eta * (eta + xi * xi),
        params.alpha2 * (eta + xi),
        params.kappa_death * xi * xi * (eta * eta + xi),
        (params.recovery_rate - params.phi * occupied) * xi -
            occupied * (xi == 0.0 ? params.lambda : params.beta) * nsum,
    };
    for (int k = 0; k < 5; ++k) {
      sum[k] += v[k];
      sq[k] += v[k] * v[k];
    }
  }
  auto finish = [&](int k) {
    McEstimate e;
    e.samples = samples;
    const double n = static_cast<double>(samples);
    e.mean = sum[k] / n;
    if (samples > 1) {
      double var = std::max(0.0, (sq[k] - n * e.mean * e.mean) / (n - 1.0));
      e.stderr_ = std::sqrt(var / n);
    }
    return e;
  };
  TildeMcTable out;
  out.beta1 = finish(0);
  out.delta1 = finish(1);
  out.beta2 = finish(2);
  out.delta2 = finish(3);
  out.g = finish(4);
  return out;
}

namespace {

struct BatteryFunction {
  const char* name;
  // Bounded cylinder function of (eta(x), xi(x), xi(x+1)).
  double (*f)(std::int64_t, std::int64_t, std::int64_t);
};

const BatteryFunction kBattery[] = {
    {"one", [](std::int64_t, std::int64_t, std::int64_t) { return 1.0; }},
    {"eta_zero",
     [](std::int64_t e, std::int64_t, std::int64_t) { return e == 0 ? 1.0 : 0.0; }},
    {"xi_le_1",
     [](std::int64_t, std::int64_t x, std::int64_t) { return x <= 1 ? 1.0 : 0.0; }},
    {"exp_eta",
     [](std::int64_t e, std::int64_t, std::int64_t) {
       return std::exp(-static_cast<double>(e));
     }},
    {"min_prod",
     [](std::int64_t e, std::int64_t x, std::int64_t) {
       return static_cast<double>(std::min<std::int64_t>(e, 3) *
                                  std::min<std::int64_t>(x, 2));
     }},
    {"parity_nbr",
     [](std::int64_t e, std::int64_t x, std::int64_t xr) {
       return ((e + x) % 2 == 0 ? 1.0 : 0.0) * (xr <= 1 ? 1.0 : 0.0);
     }},
};

struct Accumulator {
  double sum = 0.0, sq = 0.0;
  void add(double v) {
    sum += v;
    sq += v * v;
  }
  McEstimate finish(std::uint64_t samples) const {
    McEstimate e;
    e.samples = samples;
    const double n = static_cast<double>(samples);
    e.mean = sum / n;
    if (samples > 1) {
      double var = std::max(0.0, (sq - n * e.mean * e.mean) / (n - 1.0));
      e.stderr_ = std::sqrt(var / n);
    }
    return e;
  }
};

}  // namespace

std::vector<SubstitutionResidual> substitution_check(double a, double b,
                                                     std::uint64_t samples,
                                                     std::uint64_t seed) {
  require(a > 0.0 && b > 0.0, ErrorCode::InvalidArgument,
          "substitution identities need a > 0 and b > 0");
  require(samples >= 2, ErrorCode::InvalidArgument, "samples must be >= 2");

  constexpr std::size_t kN = sizeof(kBattery) / sizeof(kBattery[0]);
  Accumulator lhs1[kN], rhs1[kN], lhs2[kN], rhs2[kN];

  Rng rng(seed);
  for (std::uint64_t s = 0; s < samples; ++s) {
    const std::int64_t eta = static_cast<std::int64_t>(rng.poisson(a));
    const std::int64_t xi = static_cast<std::int64_t>(rng.poisson(b));
    const std::int64_t xi_r = static_cast<std::int64_t>(rng.poisson(b));
    const double de = static_cast<double>(eta);
    const double dx = static_cast<double>(xi);
    for (std::size_t k = 0; k < kN; ++k) {
      const auto f = kBattery[k].f;
      lhs1[k].add(eta > 0 ? f(eta - 1, xi + 1, xi_r) : 0.0);
      rhs1[k].add((a / b) * dx / (1.0 + de) * f(eta, xi, xi_r));
      lhs2[k].add(xi > 0 ? f(eta + 1, xi - 1, xi_r) : 0.0);
      rhs2[k].add((b / a) * de / (1.0 + dx) * f(eta, xi, xi_r));
    }
  }

  std::vector<SubstitutionResidual> out;
  for (std::size_t k = 0; k < kN; ++k) {
    for (int identity = 1; identity <= 2; ++identity) {
      const McEstimate l =
          (identity == 1 ? lhs1[k] : lhs2[k]).finish(samples);
      const McEstimate r =
          (identity == 1 ? rhs1[k] : rhs2[k]).finish(samples);
      SubstitutionResidual res;
      res.f_name = kBattery[k].name;
      res.identity = identity;
      res.lhs = l.mean;
      res.rhs = r.mean;
      double se = std::sqrt(l.stderr_ * l.stderr_ + r.stderr_ * r.stderr_);
      res.zscore = se > 0.0 ? std::fabs(l.mean - r.mean) / se : 0.0;
      out.push_back(res);
    }
  }
  return out;
}

double log_density_psi(const std::vector<std::int64_t>& eta,
                       const std::vector<std::int64_t>& xi,
                       const Profile& profile1, const Profile& profile2,
                       double rho) {
  require(rho > 0.0, ErrorCode::InvalidArgument, "rho must be > 0");
  require(eta.size() == xi.size() && eta.size() == profile1.size() &&
              profile1.size() == profile2.size(),
          ErrorCode::InvalidArgument, "psi needs equal-length inputs");
  double total = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) {
    const double l1 = profile1.at(i);
    const double l2 = profile2.at(i);
    require(l1 > 0.0 && l2 > 0.0, ErrorCode::InvalidArgument,
            "psi needs strictly positive profiles (apply the floor first)");
    total += static_cast<double>(eta[i]) * std::log(l1 / rho) + rho - l1;
    total += static_cast<double>(xi[i]) * std::log(l2 / rho) + rho - l2;
  }
  return total;
}

namespace {

template <typename T>
double block_average_impl(const std::vector<T>& values, std::size_t x,
                          std::size_t k) {
  require(!values.empty(), ErrorCode::InvalidArgument, "empty array");
  require(x < values.size(), ErrorCode::InvalidArgument, "x out of range");
  const std::size_t n = values.size();
  double sum = 0.0;
  const std::int64_t xi = static_cast<std::int64_t>(x);
  for (std::int64_t off = -static_cast<std::int64_t>(k);
       off <= static_cast<std::int64_t>(k); ++off) {
    std::int64_t j = (xi + off) % static_cast<std::int64_t>(n);
    if (j < 0) j += static_cast<std::int64_t>(n);
    sum += static_cast<double>(values[static_cast<std::size_t>(j)]);
  }
  return sum / static_cast<double>(2 * k + 1);
}

}  // namespace

double block_average(const std::vector<double>& values, std::size_t x,
                     std::size_t k) {
  return block_average_impl(values, x, k);
}

double block_average(const std::vector<std::int64_t>& values, std::size_t x,
                     std::size_t k) {
  return block_average_impl(values, x, k);
}

LocalEquilibriumReport local_equilibrium_divergence(
    const std::vector<SampledPair>& ensemble, const Profile& profile1,
    const Profile& profile2, std::size_t k) {
  require(ensemble.size() >= 100, ErrorCode::InvalidArgument,
          "local-equilibrium diagnostic needs >= 100 snapshots");
  const std::size_t n = profile1.size();
  require(profile2.size() == n, ErrorCode::InvalidArgument,
          "profiles must have equal length");
  for (const auto& snap : ensemble) {
    require(snap.eta.size() == n && snap.xi.size() == n,
            ErrorCode::InvalidArgument, "snapshot length mismatch");
  }

  LocalEquilibriumReport out;
  out.kl_eta.resize(n);
  out.kl_xi.resize(n);
  for (std::size_t x = 0; x < n; ++x) {
    std::vector<std::uint64_t> hist_eta, hist_xi;
    auto tally = [&](std::vector<std::uint64_t>& hist, std::int64_t value) {
      if (value >= static_cast<std::int64_t>(hist.size())) {
        hist.resize(static_cast<std::size_t>(value) + 1, 0);
      }
      ++hist[static_cast<std::size_t>(value)];
    };
    for (const auto& snap : ensemble) {
      for (std::int64_t off = -static_cast<std::int64_t>(k);
           off <= static_cast<std::int64_t>(k); ++off) {
        std::int64_t j = (static_cast<std::int64_t>(x) + off) %
                         static_cast<std::int64_t>(n);
        if (j < 0) j += static_cast<std::int64_t>(n);
        tally(hist_eta, snap.eta[static_cast<std::size_t>(j)]);
        tally(hist_xi, snap.xi[static_cast<std::size_t>(j)]);
      }
    }
    const double mean1 = block_average(profile1.values, x, k);
    const double mean2 = block_average(profile2.values, x, k);
    out.kl_eta[x] = kl_empirical_vs_pmf(
        hist_eta, [&](std::uint64_t c) { return poisson_pmf(c, mean1); });
    out.kl_xi[x] = kl_empirical_vs_pmf(
        hist_xi, [&](std::uint64_t c) { return poisson_pmf(c, mean2); });
  }
  return out;
}

}  // namespace episim
