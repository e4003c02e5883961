#include "latmut/stationary.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "latmut/quadrature.hpp"
#include "latmut/stats.hpp"

namespace latmut {

void ModelParams::validate() const {
  if (!(theta1 > 0.0) || !(theta2 > 0.0))
    throw std::domain_error("ModelParams: theta1 and theta2 must be positive");
  if (!std::isfinite(beta)) throw std::domain_error("ModelParams: beta must be finite");
}

void SampleCounts::validate() const {
  if (n1 < 0 || n2 < 0)
    throw std::domain_error("SampleCounts: need n1, n2 >= 0");
}

double log_norm_const(const ModelParams& params) {
  params.validate();
  double lg = std::lgamma(params.theta1 + params.theta2) - std::lgamma(params.theta1) -
              std::lgamma(params.theta2);
  LogValue f = hyp1f1({params.theta1, params.theta1 + params.theta2, params.beta});
  return lg - f.log_magnitude;
}

double log_stationary_pdf(double x, const ModelParams& params) {
  if (!(x > 0.0) || !(x < 1.0))
    throw std::domain_error("log_stationary_pdf: x must lie in (0,1)");
  return log_norm_const(params) + (params.theta1 - 1.0) * std::log(x) +
         (params.theta2 - 1.0) * std::log1p(-x) + params.beta * x;
}

double log_sampling_prob(const SampleCounts& counts, const ModelParams& params) {
  counts.validate();
  if (counts.n() < 1)
    throw std::domain_error("log_sampling_prob: need a sample of size >= 1");
  params.validate();
  double a = params.theta1 + counts.n1;
  double b = params.theta1 + params.theta2 + counts.n();
  LogValue f = hyp1f1({a, b, params.beta});
  return log_norm_const(params) +
         log_choose(static_cast<double>(counts.n()), static_cast<double>(counts.n1)) +
         std::lgamma(a) + std::lgamma(params.theta2 + counts.n2) - std::lgamma(b) +
         f.log_magnitude;
}

double log_posterior_pdf(double x, const SampleCounts& counts, const ModelParams& params) {
  if (!(x > 0.0) || !(x < 1.0))
    throw std::domain_error("log_posterior_pdf: x must lie in (0,1)");
  counts.validate();
  params.validate();
  double a = params.theta1 + counts.n1;
  double b = params.theta2 + counts.n2;
  LogValue f = hyp1f1({a, a + b, params.beta});
  return -log_beta(a, b) - f.log_magnitude + (a - 1.0) * std::log(x) +
         (b - 1.0) * std::log1p(-x) + params.beta * x;
}

double posterior_cdf(double x, const SampleCounts& counts, const ModelParams& params) {
  counts.validate();
  params.validate();
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double a = params.theta1 + counts.n1;
  double b = params.theta2 + counts.n2;
  double lpart = log_tilted_beta_integral(a, b, params.beta, 0.0, x);
  double lfull = log_tilted_beta_integral(a, b, params.beta);
  return std::exp(lpart - lfull);
}

double posterior_mean_quadrature(const SampleCounts& counts, const ModelParams& params) {
  double a = params.theta1 + counts.n1;
  double b = params.theta2 + counts.n2;
  double lnum = log_tilted_beta_integral(a + 1.0, b, params.beta);
  double lden = log_tilted_beta_integral(a, b, params.beta);
  return std::exp(lnum - lden);
}

namespace {

constexpr double kPlainBetaLambdaMax = 30.0;
constexpr long kRejectionCap = 10000000;

[[noreturn]] void rejection_collapse(double alpha, double delta, double lambda) {
  std::ostringstream msg;
  msg << "sample_tilted_beta: acceptance rate collapsed below 1e-6 (alpha=" << alpha
      << ", delta=" << delta << ", lambda=" << lambda
      << "); use the gamma-limit proposal path (large-lambda branch)";
  throw std::runtime_error(msg.str());
}

// Gamma proposal with the (1-x)^(delta-1) factor folded into the rate, valid
// for delta >= 1: accept prob exp((delta-1)(log1p(-x)+x)) <= 1.
double sample_large_lambda_delta_ge1(double alpha, double delta, double lambda,
                                     Philox& rng) {
  double rate = lambda + delta - 1.0;
  for (long i = 0; i < kRejectionCap; ++i) {
    double x = rng.gamma(alpha, rate);
    if (x >= 1.0) continue;
    double log_acc = (delta - 1.0) * (std::log1p(-x) + x);
    if (std::log(rng.uniform()) < log_acc) return x;
  }
  rejection_collapse(alpha, delta, lambda);
}

// Two-piece envelope for delta < 1: gamma body on (0,1/2], inversion-sampled
// (1-x)^(delta-1) tail on (1/2,1).
double sample_large_lambda_delta_lt1(double alpha, double delta, double lambda,
                                     Philox& rng) {
  double log_m1 = (1.0 - delta) * std::log(2.0);
  // Envelope mass of the gamma piece: 2^(1-delta) * P(Gamma(alpha,lambda) <= 1/2) * Z_g
  // with Z_g = Gamma(alpha)/lambda^alpha; constants shared with the tail piece.
  double log_zg = std::lgamma(alpha) - alpha * std::log(lambda);
  double p_half = reg_gamma_p(alpha, lambda * 0.5);
  double log_mass_body = log_m1 + log_zg + std::log(std::max(p_half, 1e-300));
  // Tail envelope: max over [1/2,1] of x^(alpha-1) e^(-lambda x), at the clamped
  // stationary point (alpha-1)/lambda.
  double xstar = (alpha - 1.0) / lambda;
  xstar = std::min(1.0, std::max(0.5, xstar));
  double log_m2 = (alpha - 1.0) * std::log(xstar) - lambda * xstar;
  // mass_tail = M2 * (1/2)^delta / delta
  double log_mass_tail = log_m2 - delta * std::log(2.0) - std::log(delta);

  double m = std::max(log_mass_body, log_mass_tail);
  double w_body = std::exp(log_mass_body - m);
  double w_tail = std::exp(log_mass_tail - m);
  double p_body = w_body / (w_body + w_tail);

  for (long i = 0; i < kRejectionCap; ++i) {
    if (rng.uniform() < p_body) {
      double x;
      int tries = 0;
      do {
        x = rng.gamma(alpha, lambda);
        if (++tries > 1000000) rejection_collapse(alpha, delta, lambda);
      } while (x > 0.5);
      double log_acc = (delta - 1.0) * std::log1p(-x) - log_m1;
      if (std::log(rng.uniform()) < log_acc) return x;
    } else {
      double x = 1.0 - 0.5 * std::pow(rng.uniform(), 1.0 / delta);
      double log_acc = (alpha - 1.0) * std::log(x) - lambda * x - log_m2;
      if (std::log(rng.uniform()) < log_acc) return x;
    }
  }
  rejection_collapse(alpha, delta, lambda);
}

}  // namespace

double sample_tilted_beta(double alpha, double delta, double lambda, Philox& rng) {
  if (!(alpha > 0.0) || !(delta > 0.0) || lambda < 0.0)
    throw std::domain_error("sample_tilted_beta: need alpha, delta > 0 and lambda >= 0");
  if (lambda <= kPlainBetaLambdaMax) {
    for (long i = 0; i < kRejectionCap; ++i) {
      double x = rng.beta(alpha, delta);
      if (std::log(rng.uniform()) < -lambda * x) return x;
    }
    rejection_collapse(alpha, delta, lambda);
  }
  if (delta >= 1.0) return sample_large_lambda_delta_ge1(alpha, delta, lambda, rng);
  return sample_large_lambda_delta_lt1(alpha, delta, lambda, rng);
}

double posterior_sample(const SampleCounts& counts, const ModelParams& params, Philox& rng) {
  counts.validate();
  params.validate();
  double a = params.theta1 + counts.n1;
  double b = params.theta2 + counts.n2;
  if (params.beta <= 0.0) return sample_tilted_beta(a, b, -params.beta, rng);
  return 1.0 - sample_tilted_beta(b, a, params.beta, rng);
}

namespace {

// log C approximated for large |beta| through the hypergeometric asymptotics.
double log_norm_const_asym(const ModelParams& p) {
  if (p.beta < 0.0) return p.theta1 * std::log(-p.beta) - std::lgamma(p.theta1);
  return -p.beta + p.theta2 * std::log(p.beta) - std::lgamma(p.theta2);
}

}  // namespace

double log_sampling_prob_asym(const SampleCounts& counts, const ModelParams& params,
                              AsymRegime regime) {
  counts.validate();
  params.validate();
  const double t1 = params.theta1, t2 = params.theta2, beta = params.beta;
  const double n1 = static_cast<double>(counts.n1);
  const double n2 = static_cast<double>(counts.n2);
  const double n = n1 + n2;
  const double lfact_n1 = std::lgamma(n1 + 1.0);

  switch (regime) {
    case AsymRegime::LargeBetaNeg: {
      if (!(beta < 0.0))
        throw std::invalid_argument("log_sampling_prob_asym: LargeBetaNeg needs beta < 0");
      return log_choose(n, n1) + std::lgamma(t1 + n1) - std::lgamma(t1) -
             n1 * std::log(-beta);
    }
    case AsymRegime::LargeBetaPos: {
      if (!(beta > 0.0))
        throw std::invalid_argument("log_sampling_prob_asym: LargeBetaPos needs beta > 0");
      return log_choose(n, n1) + std::lgamma(t2 + n2) - std::lgamma(t2) +
             (n1 - n) * std::log(beta);
    }
    case AsymRegime::LargeN2FixedBeta: {
      if (counts.n2 < 1)
        throw std::invalid_argument("log_sampling_prob_asym: LargeN2FixedBeta needs n2 >= 1");
      return log_norm_const(params) + std::lgamma(t1 + n1) - lfact_n1 - t1 * std::log(n2);
    }
    case AsymRegime::ScaledBetaLt1: {
      double bt = beta / n2;
      if (!(bt < 1.0) || bt == 0.0)
        throw std::invalid_argument(
            "log_sampling_prob_asym: ScaledBetaLt1 needs beta/n2 in (-inf,0) or (0,1)");
      if (bt < 0.0) {
        double abt = -bt;
        return std::lgamma(t1 + n1) - lfact_n1 - std::lgamma(t1) -
               n1 * std::log1p(abt) + t1 * std::log(abt / (1.0 + abt));
      }
      // 0 < bt < 1: the normalizing constant keeps its large-beta form.
      return log_norm_const_asym(params) + std::lgamma(t1 + n1) - lfact_n1 -
             t1 * std::log(n2) - (t1 + n1) * std::log1p(-bt);
    }
    case AsymRegime::ScaledBetaGt1: {
      double bt = beta / n2;
      if (!(bt > 1.0))
        throw std::invalid_argument("log_sampling_prob_asym: ScaledBetaGt1 needs beta/n2 > 1");
      LogValue f = hyp1f1_asym({t1 + n1, t1 + t2 + n, beta}, AsymRegime::ScaledBetaGt1,
                               counts.n2);
      return log_norm_const_asym(params) + (n1 * std::log(n2) - lfact_n1) +
             std::lgamma(t1 + n1) - (t1 + n1) * std::log(n2) + f.log_magnitude;
    }
  }
  throw std::logic_error("log_sampling_prob_asym: unreachable");
}

double sampling_ratio_asym(const SampleCounts& counts, const ModelParams& params,
                           const ScaledSelection& scaled) {
  counts.validate();
  params.validate();
  double bt = scaled.beta_tilde;
  if (!std::isfinite(bt)) throw std::domain_error("sampling_ratio_asym: beta_tilde not finite");
  if (bt == 1.0)
    throw std::domain_error("sampling_ratio_asym: beta_tilde = 1 is the excluded critical point");
  double n1 = static_cast<double>(counts.n1);
  // For bt < 0 the factor 1 - bt is 1 + |bt|, so both sub-unit cases share a form.
  if (bt < 1.0) return (params.theta1 + n1) / ((1.0 - bt) * (n1 + 1.0));
  return (bt - 1.0) * static_cast<double>(counts.n2) / (bt * (n1 + 1.0));
}

}  // namespace latmut
