#include "lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "errors.hpp"

namespace episim {

namespace {

void check_dim(int d) {
  require(d >= 1 && d <= kMaxDim, ErrorCode::InvalidArgument,
          "dimension must be in [1, 3]");
}

constexpr std::int64_t kRange2 = std::int64_t{1} << 30;  // |c| < 2^30 for d=2
constexpr std::int64_t kRange3 = std::int64_t{1} << 20;  // |c| < 2^20 for d=3

}  // namespace

SiteKey pack_site(const Coord& x, int d) {
  check_dim(d);
  switch (d) {
    case 1:
      return static_cast<SiteKey>(x[0]);
    case 2: {
      require(std::llabs(x[0]) < kRange2 && std::llabs(x[1]) < kRange2,
              ErrorCode::CountOverflow, "d=2 coordinate out of packable range");
      SiteKey a = static_cast<SiteKey>(x[0] + kRange2);
      SiteKey b = static_cast<SiteKey>(x[1] + kRange2);
      return a | (b << 31);
    }
    default: {
      require(std::llabs(x[0]) < kRange3 && std::llabs(x[1]) < kRange3 &&
                  std::llabs(x[2]) < kRange3,
              ErrorCode::CountOverflow, "d=3 coordinate out of packable range");
      SiteKey a = static_cast<SiteKey>(x[0] + kRange3);
      SiteKey b = static_cast<SiteKey>(x[1] + kRange3);
      SiteKey c = static_cast<SiteKey>(x[2] + kRange3);
      return a | (b << 21) | (c << 42);
    }
  }
}

Coord unpack_site(SiteKey key, int d) {
  check_dim(d);
  switch (d) {
    case 1:
      return make_site(static_cast<std::int64_t>(key));
    case 2: {
      std::int64_t a = static_cast<std::int64_t>(key & ((SiteKey{1} << 31) - 1));
      std::int64_t b = static_cast<std::int64_t>((key >> 31) & ((SiteKey{1} << 31) - 1));
      return make_site(a - kRange2, b - kRange2);
    }
    default: {
      std::int64_t a = static_cast<std::int64_t>(key & ((SiteKey{1} << 21) - 1));
      std::int64_t b = static_cast<std::int64_t>((key >> 21) & ((SiteKey{1} << 21) - 1));
      std::int64_t c = static_cast<std::int64_t>((key >> 42) & ((SiteKey{1} << 21) - 1));
      return make_site(a - kRange3, b - kRange3, c - kRange3);
    }
  }
}

std::vector<Coord> neighbors(const Coord& x, int d) {
  check_dim(d);
  std::vector<Coord> out;
  out.reserve(2 * d);
  for (int axis = 0; axis < d; ++axis) {
    for (std::int64_t step : {std::int64_t{-1}, std::int64_t{1}}) {
      Coord y = x;
      y[axis] += step;
      out.push_back(y);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::int64_t l1_distance(const Coord& a, const Coord& b, int d) {
  check_dim(d);
  std::int64_t total = 0;
  for (int i = 0; i < d; ++i) total += std::llabs(a[i] - b[i]);
  return total;
}

double kernel_weight(const Coord& x, const Coord& y, int d) {
  KernelFraction f = kernel_weight_exact(x, y, d);
  return static_cast<double>(f.num) / static_cast<double>(f.den);
}

KernelFraction kernel_weight_exact(const Coord& x, const Coord& y, int d) {
  check_dim(d);
  KernelFraction f;
  f.den = 2 * d;
  f.num = (l1_distance(x, y, d) == 1) ? 1 : 0;
  return f;
}

std::unordered_map<SiteKey, double> kernel_power(int n, int d) {
  check_dim(d);
  require(n >= 0, ErrorCode::InvalidArgument, "kernel power needs n >= 0");
  std::unordered_map<SiteKey, double> current;
  current[pack_site(make_site(0), d)] = 1.0;
  const double w = 1.0 / static_cast<double>(2 * d);
  for (int step = 0; step < n; ++step) {
    std::unordered_map<SiteKey, double> next;
    next.reserve(current.size() * 2 * d);
    for (const auto& [key, mass] : current) {
      Coord x = unpack_site(key, d);
      for (const Coord& y : neighbors(x, d)) {
        next[pack_site(y, d)] += mass * w;
      }
    }
    current = std::move(next);
  }
  return current;
}

double WeightSequence::at(const Coord& x) const {
  auto it = values.find(pack_site(x, d));
  return it == values.end() ? 0.0 : it->second;
}

double WeightSequence::contraction_residual(std::int64_t radius) const {
  // Window scan on Z; the construction is stated on Z only.
  require(d == 1, ErrorCode::InvalidArgument,
          "contraction residual is defined for d = 1");
  double worst = -M;  // residual at the origin is <= -M + M^{-n_max}
  for (std::int64_t x = -radius; x <= radius; ++x) {
    Coord site = make_site(x);
    double lhs = 0.0;
    for (const Coord& y : neighbors(site, d)) lhs += 0.5 * at(y);
    worst = std::max(worst, lhs - M * at(site));
  }
  return worst;
}

WeightSequence weight_sequence(double M, int n_max, int d) {
  require(M > 1.0, ErrorCode::InvalidArgument, "weight sequence requires M > 1");
  require(n_max >= 0, ErrorCode::InvalidArgument, "weight sequence requires n_max >= 0");
  check_dim(d);
  WeightSequence out;
  out.M = M;
  out.truncation_order = n_max;
  out.d = d;

  std::unordered_map<SiteKey, double> p_n;
  p_n[pack_site(make_site(0), d)] = 1.0;
  const double w = 1.0 / static_cast<double>(2 * d);
  double scale = 1.0;
  for (int n = 0;; ++n) {
    for (const auto& [key, mass] : p_n) {
      if (mass > 0.0) out.values[key] += scale * mass;
    }
    if (n == n_max) break;
    scale /= M;
    std::unordered_map<SiteKey, double> next;
    next.reserve(p_n.size() * 2 * d);
    for (const auto& [key, mass] : p_n) {
      Coord x = unpack_site(key, d);
      for (const Coord& y : neighbors(x, d)) next[pack_site(y, d)] += mass * w;
    }
    p_n = std::move(next);
  }
  return out;
}

}  // namespace episim
