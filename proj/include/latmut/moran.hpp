#pragma once

#include <utility>
#include <vector>

#include "latmut/rng.hpp"

namespace latmut {

// Discrete-time haploid Moran model with selection against A1 in the death
// step and mutation at reproduction.
struct MoranParams {
  long N = 0;
  double s = 0.0;   // selection against A1, >= 0
  double u1 = 0.0;  // A2 -> A1 mutation probability
  double u2 = 0.0;  // A1 -> A2 mutation probability

  void validate() const;
};

// Exact one-step probabilities (p_up, p_down) for the A1 count ell.
std::pair<double, double> moran_step_probs(long ell, const MoranParams& mp);

// Birth-death-with-immigration limit: k -> k+1 at rate k*birth + immigration,
// k -> k-1 at rate k*death.
struct BdiParams {
  double birth = 1.0;
  double death = 0.0;
  double immigration = 0.0;

  void validate() const;
};

struct BdiPath {
  std::vector<double> times;  // jump times
  std::vector<long> states;   // state after each jump; states[0] at time 0

  // State at time t (right-continuous).
  long at(double t) const;
};

BdiPath simulate_bdi(const BdiParams& bp, double horizon, long k0, Philox& rng);

// Long-run state snapshots at burn_in + k*spacing without storing the jump
// path; spacing well above the relaxation time gives near-independent draws.
std::vector<long> bdi_states_at(const BdiParams& bp, double burn_in, double spacing,
                                long samples, long k0, Philox& rng);

// Stationary law of the BDI limit: negative binomial with parameters
// s/(1+s) and theta1.
double negbinom_pmf(long ell, double s, double theta1);

enum class SubsampleMode { ExactHypergeometric, BinomialLimit };

// pmf over n1 of the subsample count given ell copies in the population:
// hypergeometric for a sample of n from N, or its binomial limit with
// thinning probability alpha.
std::vector<double> subsample_pmf(long ell, long N, long n, SubsampleMode mode,
                                  double alpha = 0.0);

// Closed-form mixture of the binomial subsample over the negative-binomial
// population law.
double mixed_sampling_prob(long n1, double alpha, double s, double theta1);

// One generation of the Wright-Fisher branching contrast:
// ell' ~ Poisson(theta1 + ell (1-s)).
long wf_poisson_step(long ell, double theta1, double s, Philox& rng);

}  // namespace latmut
