#include "stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace episim {

MeanStderr mean_stderr(const std::vector<double>& xs) {
  MeanStderr out;
  out.n = xs.size();
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) {
    double d = x - out.mean;
    ss += d * d;
  }
  double var = ss / static_cast<double>(xs.size() - 1);
  out.stderr_ = std::sqrt(var / static_cast<double>(xs.size()));
  return out;
}

double kolmogorov_q(double t) {
  if (t <= 0.0) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    double term = std::exp(-2.0 * k * k * t * t);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-16) break;
  }
  return std::min(1.0, std::max(0.0, 2.0 * sum));
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  KsResult out;
  if (a.empty() || b.empty()) return out;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t ia = 0, ib = 0;
  double d = 0.0;
  while (ia < a.size() && ib < b.size()) {
    double v = std::min(a[ia], b[ib]);
    while (ia < a.size() && a[ia] <= v) ++ia;
    while (ib < b.size() && b[ib] <= v) ++ib;
    d = std::max(d, std::fabs(static_cast<double>(ia) / na -
                              static_cast<double>(ib) / nb));
  }
  out.statistic = d;
  double ne = std::sqrt(na * nb / (na + nb));
  out.p_value = kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
  return out;
}

KsResult ks_one_sample(std::vector<double> xs,
                       const std::function<double(double)>& cdf) {
  KsResult out;
  if (xs.empty()) return out;
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < xs.size()) {
    double v = xs[i];
    double below = static_cast<double>(i) / n;
    while (i < xs.size() && xs[i] <= v) ++i;
    double above = static_cast<double>(i) / n;
    double f = cdf(v);
    d = std::max(d, std::max(std::fabs(above - f), std::fabs(below - f)));
  }
  out.statistic = d;
  double sn = std::sqrt(n);
  out.p_value = kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
  return out;
}

KsResult ks_one_sample_discrete(std::vector<double> xs,
                                const std::function<double(double)>& cdf) {
  KsResult out;
  if (xs.empty()) return out;
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < xs.size()) {
    double v = xs[i];
    double below = static_cast<double>(i) / n;
    while (i < xs.size() && xs[i] <= v) ++i;
    double above = static_cast<double>(i) / n;
    d = std::max(d, std::fabs(above - cdf(v)));
    d = std::max(d, std::fabs(below - cdf(v - 1.0)));
  }
  out.statistic = d;
  double sn = std::sqrt(n);
  out.p_value = kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
  return out;
}

double kl_empirical_vs_pmf(const std::vector<std::uint64_t>& histogram,
                           const std::function<double(std::uint64_t)>& pmf) {
  std::uint64_t total = 0;
  for (auto c : histogram) total += c;
  if (total == 0) return 0.0;
  double kl = 0.0;
  for (std::size_t k = 0; k < histogram.size(); ++k) {
    if (histogram[k] == 0) continue;
    double p = static_cast<double>(histogram[k]) / static_cast<double>(total);
    double q = pmf(k);
    kl += p * std::log(p / q);
  }
  return kl;
}

double poisson_pmf(std::uint64_t k, double mean) {
  if (mean <= 0.0) return k == 0 ? 1.0 : 0.0;
  double log_p = -mean + static_cast<double>(k) * std::log(mean) -
                 std::lgamma(static_cast<double>(k) + 1.0);
  return std::exp(log_p);
}

double poisson_cdf(double x, double mean) {
  if (x < 0.0) return 0.0;
  double sum = 0.0;
  std::uint64_t top = static_cast<std::uint64_t>(std::floor(x));
  for (std::uint64_t k = 0; k <= top; ++k) sum += poisson_pmf(k, mean);
  return std::min(1.0, sum);
}

}  // namespace episim
