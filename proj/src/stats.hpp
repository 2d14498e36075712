#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace episim {

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
};

MeanStderr mean_stderr(const std::vector<double>& xs);

// Survival-function of the Kolmogorov distribution, Q(t) = 2 sum (-1)^{k-1} exp(-2 k^2 t^2).
double kolmogorov_q(double t);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Two-sample Kolmogorov-Smirnov test; handles ties (integer-valued samples)
// by stepping both empirical CDFs across the pooled sorted values. The
// asymptotic p-value is conservative on heavily tied data.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// One-sample test against a continuous CDF.
KsResult ks_one_sample(std::vector<double> xs,
                       const std::function<double(double)>& cdf);

// One-sample test for integer-valued data: the supremum compares the ECDF
// just after each atom with F(v) and just before it with F(v-1). The
// asymptotic p-value is conservative on discrete laws.
KsResult ks_one_sample_discrete(std::vector<double> xs,
                                const std::function<double(double)>& cdf);

// KL divergence between an empirical histogram over {0,1,...} and a reference
// pmf with full support on the nonnegative integers.
double kl_empirical_vs_pmf(const std::vector<std::uint64_t>& histogram,
                           const std::function<double(std::uint64_t)>& pmf);

double poisson_pmf(std::uint64_t k, double mean);
double poisson_cdf(double x, double mean);

}  // namespace episim
