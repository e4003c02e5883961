#pragma once

#include "latmut/rng.hpp"
#include "latmut/specfun.hpp"

namespace latmut {

struct ModelParams {
  double theta1 = 0.0;  // scaled A2 -> A1 mutation rate
  double theta2 = 0.0;  // scaled A1 -> A2 mutation rate
  double beta = 0.0;    // scaled selection for A1

  void validate() const;
};

struct SampleCounts {
  long n1 = 0;
  long n2 = 0;

  long n() const { return n1 + n2; }
  void validate() const;
};

struct ScaledSelection {
  double beta_tilde = 0.0;  // beta / n2
};

// log C with C = Gamma(t1+t2) / (Gamma(t1) Gamma(t2) 1F1(t1; t1+t2; beta)).
double log_norm_const(const ModelParams& params);

// log of C x^(t1-1) (1-x)^(t2-1) e^(beta x) on (0,1).
double log_stationary_pdf(double x, const ModelParams& params);

// log of the probability of drawing (n1, n2) from the stationary law.
double log_sampling_prob(const SampleCounts& counts, const ModelParams& params);

// log posterior density of the population frequency given the counts.
double log_posterior_pdf(double x, const SampleCounts& counts, const ModelParams& params);

// Posterior CDF via the quadrature route (independent of the series route).
double posterior_cdf(double x, const SampleCounts& counts, const ModelParams& params);
double posterior_mean_quadrature(const SampleCounts& counts, const ModelParams& params);

// Exact draw from the posterior by rejection.
double posterior_sample(const SampleCounts& counts, const ModelParams& params, Philox& rng);

// Exact draw from a density proportional to x^(alpha-1) (1-x)^(delta-1) e^(-lambda x)
// on (0,1), lambda >= 0. Beta proposal for small lambda; for large lambda a
// gamma proposal matched to the concentration scale, with an inversion-sampled
// boundary patch when delta < 1 so rejection stays exact.
double sample_tilted_beta(double alpha, double delta, double lambda, Philox& rng);

// Leading-order sampling probability for the regime, with all constants
// resolved by composing the gamma-ratio and hypergeometric asymptotics.
double log_sampling_prob_asym(const SampleCounts& counts, const ModelParams& params,
                              AsymRegime regime);

// q(n1+1,n2)/q(n1,n2) to leading order; beta_tilde = 1 is unsupported.
double sampling_ratio_asym(const SampleCounts& counts, const ModelParams& params,
                           const ScaledSelection& scaled);

}  // namespace latmut
