#include "latmut/moran.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "latmut/stats.hpp"

namespace latmut {

void MoranParams::validate() const {
  if (N < 2) throw std::domain_error("MoranParams: need N >= 2");
  if (s < 0.0) throw std::domain_error("MoranParams: need s >= 0");
  if (u1 < 0.0 || u1 >= 1.0 || u2 < 0.0 || u2 >= 1.0 || u1 + u2 > 1.0)
    throw std::domain_error("MoranParams: mutation probabilities must satisfy u1,u2 in [0,1), u1+u2 <= 1");
}

std::pair<double, double> moran_step_probs(long ell, const MoranParams& mp) {
  mp.validate();
  if (ell < 0 || ell > mp.N) throw std::out_of_range("moran_step_probs: ell outside [0,N]");
  double N = static_cast<double>(mp.N);
  double l = static_cast<double>(ell);
  double wdenom = (N - l) + l * (1.0 + mp.s);
  double p_up = ((N - l) / wdenom) * (l / N) * (1.0 - mp.u2) +
                ((N - l) / wdenom) * ((N - l) / N) * mp.u1;
  double p_down = ((l * (1.0 + mp.s)) / wdenom) * ((N - l) / N) * (1.0 - mp.u1) +
                  ((l * (1.0 + mp.s)) / wdenom) * (l / N) * mp.u2;
  return {p_up, p_down};
}

void BdiParams::validate() const {
  if (!(birth > 0.0) || !(death > 0.0) || immigration < 0.0)
    throw std::domain_error("BdiParams: rates must be positive (immigration >= 0)");
}

long BdiPath::at(double t) const {
  if (states.empty()) throw std::logic_error("BdiPath: empty");
  auto it = std::upper_bound(times.begin(), times.end(), t);
  std::size_t i = static_cast<std::size_t>(it - times.begin());
  if (i == 0) return states.front();
  return states[i - 1];
}

namespace {

// Advance the jump chain past `target`; returns the state holding at that time.
long bdi_run_until(const BdiParams& bp, double& t, long& k, double target, Philox& rng) {
  for (;;) {
    double up = static_cast<double>(k) * bp.birth + bp.immigration;
    double down = static_cast<double>(k) * bp.death;
    double total = up + down;
    if (!(total > 0.0)) return k;  // absorbing (no immigration, k = 0)
    double gap = rng.exponential(total);
    if (t + gap >= target) {
      // Memoryless residual clock: restart from the target itself.
      t = target;
      return k;
    }
    t += gap;
    k += rng.uniform() * total < up ? 1 : -1;
  }
}

}  // namespace

BdiPath simulate_bdi(const BdiParams& bp, double horizon, long k0, Philox& rng) {
  bp.validate();
  if (!(horizon > 0.0)) throw std::invalid_argument("simulate_bdi: horizon must be positive");
  if (k0 < 0) throw std::invalid_argument("simulate_bdi: k0 must be nonnegative");
  BdiPath path;
  path.times.push_back(0.0);
  path.states.push_back(k0);
  double t = 0.0;
  long k = k0;
  for (;;) {
    double up = static_cast<double>(k) * bp.birth + bp.immigration;
    double down = static_cast<double>(k) * bp.death;
    double total = up + down;
    if (!(total > 0.0)) break;  // absorbing (no immigration, k = 0)
    t += rng.exponential(total);
    if (t >= horizon) break;
    k += rng.uniform() * total < up ? 1 : -1;
    path.times.push_back(t);
    path.states.push_back(k);
  }
  return path;
}

std::vector<long> bdi_states_at(const BdiParams& bp, double burn_in, double spacing,
                                long samples, long k0, Philox& rng) {
  bp.validate();
  if (!(spacing > 0.0) || samples < 1 || burn_in < 0.0)
    throw std::invalid_argument("bdi_states_at: bad sampling plan");
  std::vector<long> out;
  out.reserve(static_cast<std::size_t>(samples));
  double t = 0.0;
  long k = k0;
  double target = burn_in;
  for (long i = 0; i < samples; ++i) {
    if (t < target) {
      long held = bdi_run_until(bp, t, k, target, rng);
      out.push_back(held);
    } else {
      out.push_back(k);
    }
    target += spacing;
  }
  return out;
}

double negbinom_pmf(long ell, double s, double theta1) {
  if (ell < 0) return 0.0;
  if (!(s > 0.0) || !(theta1 > 0.0))
    throw std::domain_error("negbinom_pmf: need s > 0 and theta1 > 0");
  double l = static_cast<double>(ell);
  double log_p = std::lgamma(l + theta1) - std::lgamma(l + 1.0) - std::lgamma(theta1) -
                 l * std::log1p(s) + theta1 * (std::log(s) - std::log1p(s));
  return std::exp(log_p);
}

std::vector<double> subsample_pmf(long ell, long N, long n, SubsampleMode mode,
                                  double alpha) {
  if (ell < 0) throw std::domain_error("subsample_pmf: need ell >= 0");
  if (mode == SubsampleMode::ExactHypergeometric) {
    if (N < 1 || ell > N || n < 0 || n > N)
      throw std::domain_error("subsample_pmf: need 0 <= ell <= N and 0 <= n <= N");
    std::vector<double> pmf(static_cast<std::size_t>(std::min(ell, n)) + 1, 0.0);
    for (long k = std::max(0L, n - (N - ell)); k <= std::min(ell, n); ++k) {
      double lp = log_choose(static_cast<double>(ell), static_cast<double>(k)) +
                  log_choose(static_cast<double>(N - ell), static_cast<double>(n - k)) -
                  log_choose(static_cast<double>(N), static_cast<double>(n));
      pmf[static_cast<std::size_t>(k)] = std::exp(lp);
    }
    return pmf;
  }
  if (!(alpha > 0.0) || alpha > 1.0)
    throw std::domain_error("subsample_pmf: binomial limit needs alpha in (0,1]");
  std::vector<double> pmf(static_cast<std::size_t>(ell) + 1, 0.0);
  for (long k = 0; k <= ell; ++k) {
    double lp = log_choose(static_cast<double>(ell), static_cast<double>(k));
    if (k > 0) lp += k * std::log(alpha);
    if (ell - k > 0) lp += (ell - k) * std::log1p(-alpha);
    pmf[static_cast<std::size_t>(k)] = (alpha == 1.0 && k < ell) ? 0.0 : std::exp(lp);
  }
  return pmf;
}

double mixed_sampling_prob(long n1, double alpha, double s, double theta1) {
  if (n1 < 0) return 0.0;
  if (!(alpha > 0.0) || alpha > 1.0 || !(s > 0.0) || !(theta1 > 0.0))
    throw std::domain_error("mixed_sampling_prob: need alpha in (0,1], s > 0, theta1 > 0");
  double k = static_cast<double>(n1);
  double log_p = std::lgamma(k + theta1) - std::lgamma(k + 1.0) - std::lgamma(theta1) +
                 k * (std::log(alpha) - std::log(alpha + s)) +
                 theta1 * (std::log(s) - std::log(alpha + s));
  return std::exp(log_p);
}

long wf_poisson_step(long ell, double theta1, double s, Philox& rng) {
  if (ell < 0) throw std::domain_error("wf_poisson_step: need ell >= 0");
  if (!(theta1 > 0.0)) throw std::domain_error("wf_poisson_step: need theta1 > 0");
  if (s >= 1.0) throw std::domain_error("wf_poisson_step: need s < 1");
  return rng.poisson(theta1 + static_cast<double>(ell) * (1.0 - s));
}

}  // namespace latmut
