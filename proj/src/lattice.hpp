#pragma once

#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

namespace episim {

// Sites of Z^d for d in {1,2,3}, stored as fixed-width coordinates with the
// unused dimensions zero. Enough for the models here; the hydrodynamic part
// lives on d=1 exclusively.
inline constexpr int kMaxDim = 3;
using Coord = std::array<std::int64_t, kMaxDim>;

inline Coord make_site(std::int64_t x0, std::int64_t x1 = 0, std::int64_t x2 = 0) {
  return Coord{x0, x1, x2};
}

// Packed key for hash maps. d=1 keeps the full 64-bit range; d=2 packs two
// 31-bit fields; d=3 packs three 21-bit fields. Coordinates outside those
// ranges are rejected (they are unreachable at any realistic event budget
// in d >= 2).
using SiteKey = std::uint64_t;
SiteKey pack_site(const Coord& x, int d);
Coord unpack_site(SiteKey key, int d);

// The 2d nearest neighbors of x at l1 distance 1, in lexicographic order of
// their coordinate vectors. The fixed order keeps event streams reproducible.
std::vector<Coord> neighbors(const Coord& x, int d);

std::int64_t l1_distance(const Coord& a, const Coord& b, int d);

// Nearest-neighbor transition kernel p(x,y) = 1/(2d) * 1{|x-y|_1 = 1}.
double kernel_weight(const Coord& x, const Coord& y, int d);

// Exact rational form of the kernel weight; numerator is 0 or 1 and the
// denominator 2d, so row sums can be checked in integer arithmetic.
struct KernelFraction {
  std::int64_t num = 0;
  std::int64_t den = 1;
};
KernelFraction kernel_weight_exact(const Coord& x, const Coord& y, int d);

// n-step kernel p^(n)(., 0) by repeated dense convolution; exact up to
// floating point on the dyadic weights.
std::unordered_map<SiteKey, double> kernel_power(int n, int d);

// Weighted-norm sequence k_x = sum_{n<=n_max} M^{-n} p^(n)(x, 0). The
// contraction residual max_x [ sum_y p(x,y) k_y - M k_x ] over |x| <= radius
// tends to a nonpositive limit as n_max grows; truncation leaves an excess
// bounded by M^{-n_max}.
struct WeightSequence {
  double M = 2.0;
  int truncation_order = 0;
  int d = 1;
  std::unordered_map<SiteKey, double> values;  // sites with k_x > 0 only

  double at(const Coord& x) const;
  double contraction_residual(std::int64_t radius) const;
};

WeightSequence weight_sequence(double M, int n_max, int d = 1);

}  // namespace episim
