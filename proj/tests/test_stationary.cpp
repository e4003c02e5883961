#include <cmath>

#include "doctest.h"
#include "latmut/quadrature.hpp"
#include "latmut/rng.hpp"
#include "latmut/stationary.hpp"
#include "latmut/stats.hpp"
#include "test_helpers.hpp"

using namespace latmut;
using latmut::testing::ks_vs_log_pdf;

TEST_CASE("normalizing constant") {
  // Uniform density.
  CHECK(log_norm_const({1.0, 1.0, 0.0}) == doctest::Approx(0.0).epsilon(1e-14));
  // Beta(1/2,1/2) constant is 1/pi.
  CHECK(log_norm_const({0.5, 0.5, 0.0}) ==
        doctest::Approx(-std::log(M_PI)).epsilon(1e-13));
  // Frozen extended-precision value.
  CHECK(log_norm_const({0.01, 0.02, 10.0}) ==
        doctest::Approx(-13.857088143841336785).epsilon(1e-12));
}

TEST_CASE("stationary density") {
  CHECK(log_stationary_pdf(0.3, {1.0, 1.0, 0.0}) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(log_stationary_pdf(0.9, {0.01, 0.02, 10.0}) ==
        doctest::Approx(-2.4962478422059239766).epsilon(1e-12));
  CHECK_THROWS_AS(log_stationary_pdf(0.0, {1.0, 1.0, 0.0}), std::domain_error);
  CHECK_THROWS_AS(log_stationary_pdf(1.0, {1.0, 1.0, 0.0}), std::domain_error);

  // The density integrates to one: quadrature route vs series normalizer.
  for (auto [t1, t2, b] : {std::tuple{0.1, 0.3, -5.0}, std::tuple{0.01, 0.02, 10.0},
                           std::tuple{0.5, 0.5, 800.0}}) {
    double mass = log_norm_const({t1, t2, b}) + log_tilted_beta_integral(t1, t2, b);
    CHECK(std::fabs(mass) < 1e-8);
  }
}

TEST_CASE("sampling probability") {
  // Uniform prior makes every count equally likely.
  for (long n1 = 0; n1 <= 10; ++n1)
    CHECK(log_sampling_prob({n1, 10 - n1}, {1.0, 1.0, 0.0}) ==
          doctest::Approx(std::log(1.0 / 11.0)).epsilon(1e-12));

  // Law of total probability at n = 20.
  ModelParams p{0.05, 0.2, -3.0};
  double sum = 0.0;
  for (long n1 = 0; n1 <= 20; ++n1) sum += std::exp(log_sampling_prob({n1, 20 - n1}, p));
  CHECK(std::fabs(sum - 1.0) < 1e-10);

  // Frozen value and the quadrature route.
  CHECK(log_sampling_prob({1, 4}, {0.1, 0.1, 2.0}) ==
        doctest::Approx(-3.8756034523642823861).epsilon(1e-12));
  double lq = log_norm_const({0.1, 0.1, 2.0}) + log_choose(5, 1) +
              log_tilted_beta_integral(0.1 + 1, 0.1 + 4, 2.0);
  CHECK(lq == doctest::Approx(-3.8756034523642823861).epsilon(1e-10));
}

TEST_CASE("label swap symmetry") {
  Philox rng(11, 0);
  for (int i = 0; i < 40; ++i) {
    double t1 = 0.05 + rng.uniform(), t2 = 0.05 + rng.uniform();
    double b = -8.0 + 16.0 * rng.uniform();
    long n1 = static_cast<long>(rng.uniform() * 6);
    long n2 = 1 + static_cast<long>(rng.uniform() * 8);
    double a = log_sampling_prob({n1, n2}, {t1, t2, b});
    double c = log_sampling_prob({n2, n1}, {t2, t1, -b});
    CHECK(std::fabs(a - c) < 1e-10 * std::max(1.0, std::fabs(a)));
  }
}

TEST_CASE("posterior density") {
  // Conjugacy at beta = 0.
  ModelParams p{0.7, 1.3, 0.0};
  SampleCounts c{3, 5};
  double a = p.theta1 + c.n1, b = p.theta2 + c.n2;
  for (double x : {0.05, 0.3, 0.9}) {
    double expected = -log_beta(a, b) + (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x);
    CHECK(log_posterior_pdf(x, c, p) == doctest::Approx(expected).epsilon(1e-12));
  }
  // No data: the posterior is the stationary density.
  ModelParams q{0.3, 0.8, -2.5};
  for (double x : {0.1, 0.6})
    CHECK(log_posterior_pdf(x, {0, 0}, q) ==
          doctest::Approx(log_stationary_pdf(x, q)).epsilon(1e-12));
  // Frozen value.
  CHECK(log_posterior_pdf(0.05, {2, 50}, {0.3, 0.7, -8.0}) ==
        doctest::Approx(2.3854179171696174723).epsilon(1e-12));
}

TEST_CASE("bayes consistency") {
  Philox rng(12, 0);
  for (int i = 0; i < 40; ++i) {
    double t1 = 0.05 + rng.uniform(), t2 = 0.05 + rng.uniform();
    double b = -10.0 + 20.0 * rng.uniform();
    long n1 = static_cast<long>(rng.uniform() * 5);
    long n2 = 1 + static_cast<long>(rng.uniform() * 9);
    double x = 0.02 + 0.96 * rng.uniform();
    ModelParams p{t1, t2, b};
    SampleCounts c{n1, n2};
    double lhs = log_posterior_pdf(x, c, p);
    double rhs = log_stationary_pdf(x, p) +
                 log_choose(static_cast<double>(c.n()), static_cast<double>(n1)) +
                 n1 * std::log(x) + n2 * std::log1p(-x) - log_sampling_prob(c, p);
    CHECK(std::fabs(lhs - rhs) < 1e-10 * std::max(1.0, std::fabs(lhs)));
  }
}

TEST_CASE("posterior sampler: conjugate case") {
  ModelParams p{0.6, 1.1, 0.0};
  SampleCounts c{2, 3};
  Philox rng(13, 0);
  std::vector<double> draws;
  for (int i = 0; i < 20000; ++i) draws.push_back(posterior_sample(c, p, rng));
  double a = p.theta1 + c.n1, b = p.theta2 + c.n2;
  auto log_pdf = [&](double x) {
    return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x);
  };
  double d = ks_vs_log_pdf(draws, log_pdf, 0.0, 1.0);
  CHECK(ks_pvalue(d, draws.size()) > 0.01);
}

TEST_CASE("posterior sampler: strong selection, exact target") {
  // Large-lambda branch, both delta >= 1 and the boundary-patch delta < 1.
  for (auto [t1, t2, b, n1, n2] :
       {std::tuple{0.1, 0.1, 5.0, 3L, 3L}, std::tuple{0.5, 0.5, 800.0, 2L, 2L},
        std::tuple{0.5, 0.5, -300.0, 0L, 0L}}) {
    ModelParams p{t1, t2, b};
    SampleCounts c{n1, n2};
    Philox rng(14, 0);
    std::vector<double> draws;
    for (int i = 0; i < 20000; ++i) draws.push_back(posterior_sample(c, p, rng));
    double aa = t1 + n1, bb = t2 + n2;
    auto log_pdf = [&](double x) {
      return (aa - 1.0) * std::log(x) + (bb - 1.0) * std::log1p(-x) + b * x;
    };
    double d = ks_vs_log_pdf(draws, log_pdf, 0.0, 1.0);
    CHECK(ks_pvalue(d, draws.size()) > 0.01);
    // Sample mean against the quadrature mean.
    Summary s = summarize(draws);
    double qm = posterior_mean_quadrature(c, p);
    CHECK(std::fabs(s.mean - qm) < 3.0 * s.std_error);
  }
}

TEST_CASE("posterior gamma limit") {
  // Rare-allele scaling: n2 * p0 approaches Gamma(n1 + theta1, 1 - bt).
  long n2 = 10000;
  ModelParams p{0.3, 0.5, -0.5 * static_cast<double>(n2)};
  SampleCounts c{2, n2};
  Philox rng(15, 0);
  std::vector<double> scaled;
  for (int i = 0; i < 20000; ++i)
    scaled.push_back(static_cast<double>(n2) * posterior_sample(c, p, rng));
  std::sort(scaled.begin(), scaled.end());
  std::vector<double> cdf(scaled.size());
  for (std::size_t i = 0; i < scaled.size(); ++i)
    cdf[i] = gamma_cdf(scaled[i], 2.3, 1.5);
  double d = ks_statistic(cdf);
  CHECK(d < 0.05);
}

TEST_CASE("posterior concentration ladders") {
  // Tail masses shrink exponentially, so the ladder compares log masses.
  auto log_mass = [](const SampleCounts& c, const ModelParams& p, double lo, double hi) {
    double a = p.theta1 + c.n1, b = p.theta2 + c.n2;
    return log_tilted_beta_integral(a, b, p.beta, lo, hi) -
           log_tilted_beta_integral(a, b, p.beta);
  };
  // Strong positive selection pushes the posterior to 1...
  double prev = 0.0;
  for (double b : {50.0, 200.0, 800.0}) {
    double lm = log_mass({3, 7}, {0.5, 0.5, b}, 0.0, 0.9);
    CHECK(lm < prev);
    prev = lm;
  }
  CHECK(prev < std::log(0.05));
  // ... the scaled regime below the critical point to 0 ...
  prev = 0.0;
  for (long n2 : {200L, 1000L, 5000L}) {
    ModelParams p{0.3, 0.5, -0.5 * static_cast<double>(n2)};
    double lm = log_mass({2, n2}, p, 0.05, 1.0);
    CHECK(lm < prev);
    prev = lm;
  }
  // ... and above it to 1 - 1/bt.
  prev = 0.0;
  for (long n2 : {200L, 1000L, 5000L}) {
    ModelParams p{0.5, 0.5, 2.0 * static_cast<double>(n2)};
    double lo_mass = log_mass({3, n2}, p, 0.0, 0.4);
    double hi_mass = log_mass({3, n2}, p, 0.6, 1.0);
    double lm = std::max(lo_mass, hi_mass) +
                std::log1p(std::exp(-std::fabs(lo_mass - hi_mass)));
    CHECK(lm < prev);
    prev = lm;
  }
}

TEST_CASE("posterior mean in the sub-critical scaled regime") {
  double bt = -0.5, t1 = 0.3;
  long n1 = 2;
  for (long n2 : {2000L, 20000L}) {
    ModelParams p{t1, 0.5, bt * static_cast<double>(n2)};
    double mean = posterior_mean_quadrature({n1, n2}, p);
    double predicted = (t1 + n1) / ((1.0 - bt) * static_cast<double>(n1 + n2));
    double tol = n2 == 2000 ? 0.02 : 0.002;
    CHECK(std::fabs(mean / predicted - 1.0) < tol);
  }
}

TEST_CASE("asymptotic sampling probabilities") {
  // Strong-selection form: first-order error, halving under doubling.
  ModelParams p{0.1, 0.3, -400.0};
  SampleCounts c{2, 4};
  auto rel = [&](const ModelParams& par, AsymRegime reg) {
    return std::fabs(std::expm1(log_sampling_prob_asym(c, par, reg) -
                                log_sampling_prob(c, par)));
  };
  double e1 = rel(p, AsymRegime::LargeBetaNeg);
  p.beta = -800.0;
  double e2 = rel(p, AsymRegime::LargeBetaNeg);
  CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.25));
  CHECK(e1 < 10.0 / 400.0);

  // Sub-critical scaled form against the exact value.
  long n2 = 400;
  ModelParams ps{0.2, 0.3, -0.5 * static_cast<double>(n2)};
  double err = std::fabs(std::expm1(
      log_sampling_prob_asym({3, n2}, ps, AsymRegime::ScaledBetaLt1) -
      log_sampling_prob({3, n2}, ps)));
  CHECK(err < 0.03);

  // Super-critical scaled form.
  ModelParams pg{0.5, 0.5, 2.0 * static_cast<double>(n2)};
  double errg = std::fabs(std::expm1(
      log_sampling_prob_asym({1, n2}, pg, AsymRegime::ScaledBetaGt1) -
      log_sampling_prob({1, n2}, pg)));
  CHECK(errg < 0.05);

  // The sub-critical form at vanishing tilt reproduces the large-n2 shape in n1.
  ModelParams pz{0.2, 0.3, -1e-7 * static_cast<double>(n2)};
  for (long n1 : {0L, 1L, 2L, 3L}) {
    double lq = log_sampling_prob_asym({n1, n2}, pz, AsymRegime::ScaledBetaLt1);
    double shape = std::lgamma(0.2 + n1) - std::lgamma(n1 + 1.0);
    double lq0 = log_sampling_prob_asym({0, n2}, pz, AsymRegime::ScaledBetaLt1);
    double shape0 = std::lgamma(0.2) - 0.0;
    CHECK(lq - lq0 == doctest::Approx(shape - shape0).epsilon(1e-5));
  }
}

TEST_CASE("asymptotic sampling ratio") {
  // (theta1+n1)/((1+|bt|)(n1+1)).
  CHECK(sampling_ratio_asym({2, 100}, {0.5, 0.5, 0.0}, {-1.0}) ==
        doctest::Approx(2.5 / 6.0).epsilon(1e-14));
  // ((bt-1)/bt) n2/(n1+1).
  CHECK(sampling_ratio_asym({0, 1000}, {0.5, 0.5, 0.0}, {2.0}) ==
        doctest::Approx(500.0).epsilon(1e-14));
  // The neutral ratio at vanishing tilt.
  CHECK(sampling_ratio_asym({2, 100}, {0.5, 0.5, 0.0}, {-1e-12}) ==
        doctest::Approx(2.5 / 3.0).epsilon(1e-9));
  CHECK_THROWS_AS(sampling_ratio_asym({2, 100}, {0.5, 0.5, 0.0}, {1.0}),
                  std::domain_error);
}

TEST_CASE("regime misuse is rejected") {
  CHECK_THROWS_AS(log_sampling_prob_asym({2, 4}, {0.1, 0.3, 5.0}, AsymRegime::LargeBetaNeg),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      log_sampling_prob_asym({2, 400}, {0.1, 0.3, 100.0}, AsymRegime::ScaledBetaGt1),
      std::invalid_argument);
}
