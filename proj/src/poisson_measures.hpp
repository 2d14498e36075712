#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace episim {

// Positive intensity profile on the continuum torus [0,1), stored at the
// grid points theta = x/N. Values below the floor are lifted to it before
// any logarithm is taken (the epsilon trick from the entropy argument).
struct Profile {
  std::vector<double> values;

  static constexpr double kFloor = 1e-8;

  std::size_t size() const { return values.size(); }
  double at(std::size_t i) const { return values[i]; }

  static Profile constant(std::size_t n, double level);
  static Profile from_function(std::size_t n,
                               const std::function<double(double)>& f);
  void apply_floor();
};

// Coefficients of the two-species reaction rates and of g. The death-rate
// coefficient is called kappa_death to keep it apart from the cluster size.
// recovery_rate is 1 in the model; the dial exists so diffusion-only
// diagnostics can switch the whole reaction part off.
struct TildeParams {
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double kappa_death = 0.0;
  double lambda = 0.0;
  double beta = 0.0;
  double phi = 0.0;
  double recovery_rate = 1.0;

  void validate() const;
};

// Expectations of the reaction rates under nu_a x nu_b, in closed form from
// Poisson moments (EX = a, EX^2 = a + a^2, EX^3 = a^3 + 3a^2 + a):
//   beta1 = alpha1 (a + b)
//   beta2 = alpha2 (a + b)
//   delta1 = kappa [ (a^3 + 3a^2 + a) + (a^2 + a)(b^2 + b) ]
//   delta2 = kappa [ (a^2 + a)(b^2 + b) + (b^3 + 3b^2 + b) ]
//   g = b (1 - phi (1 - e^-a)) - 2b (1 - e^-a)(lambda e^-b + beta (1 - e^-b))
// The neighbor sum in g has mean 2b on Z (two neighbors).
struct TildeRates {
  double beta1 = 0.0;
  double delta1 = 0.0;
  double beta2 = 0.0;
  double delta2 = 0.0;
  double g = 0.0;
};

TildeRates tilde_rates(double a, double b, const TildeParams& params);

// Samples independent Poisson fields (eta, xi) with the given intensities.
struct SampledPair {
  std::vector<std::int64_t> eta;
  std::vector<std::int64_t> xi;
};
SampledPair sample_product_poisson(const Profile& profile1,
                                   const Profile& profile2, std::uint64_t seed);

// One Monte Carlo draw seen by a cylinder function: the site pair plus the
// two neighboring xi values entering the outside-infection term.
struct CylinderDraw {
  std::int64_t eta = 0;
  std::int64_t xi = 0;
  std::int64_t xi_left = 0;
  std::int64_t xi_right = 0;
};

struct McEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::uint64_t samples = 0;
};

// Monte Carlo evaluation of the tilde average of h under nu_a x nu_b.
McEstimate tilde_mc(const std::function<double(const CylinderDraw&)>& h,
                    double a, double b, std::uint64_t samples,
                    std::uint64_t seed);

// Monte Carlo estimates of all five tilde rates on shared draws.
struct TildeMcTable {
  McEstimate beta1, delta1, beta2, delta2, g;
};
TildeMcTable tilde_rates_mc(double a, double b, const TildeParams& params,
                            std::uint64_t samples, std::uint64_t seed);

// One standardized residual per test function and identity:
//   E[1{eta>0} f(eta-1, xi+1)] = (a/b) E[ xi/(1+eta) f(eta, xi) ]
//   E[1{xi>0} f(eta+1, xi-1)]  = (b/a) E[ eta/(1+xi) f(eta, xi) ]
struct SubstitutionResidual {
  std::string f_name;
  int identity = 1;  // 1 or 2
  double lhs = 0.0;
  double rhs = 0.0;
  double zscore = 0.0;  // |lhs - rhs| / combined stderr
};
std::vector<SubstitutionResidual> substitution_check(double a, double b,
                                                     std::uint64_t samples,
                                                     std::uint64_t seed);

// log of the Radon-Nikodym density of nu_{profile1} x nu_{profile2} with
// respect to nu_rho x nu_rho, evaluated at the configuration.
double log_density_psi(const std::vector<std::int64_t>& eta,
                       const std::vector<std::int64_t>& xi,
                       const Profile& profile1, const Profile& profile2,
                       double rho);

// (2k+1)-block average around x with periodic wraparound.
double block_average(const std::vector<double>& values, std::size_t x,
                     std::size_t k);
double block_average(const std::vector<std::int64_t>& values, std::size_t x,
                     std::size_t k);

// Per-site KL divergence between the pooled empirical law of the counts in
// the (2k+1)-block around each site (across the ensemble) and the Poisson
// law whose intensity is the block-averaged profile.
struct LocalEquilibriumReport {
  std::vector<double> kl_eta;
  std::vector<double> kl_xi;
};
LocalEquilibriumReport local_equilibrium_divergence(
    const std::vector<SampledPair>& ensemble, const Profile& profile1,
    const Profile& profile2, std::size_t k);

}  // namespace episim
