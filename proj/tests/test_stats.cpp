#include <cmath>

#include "doctest.h"
#include "latmut/rng.hpp"
#include "latmut/stats.hpp"

using namespace latmut;

TEST_CASE("incomplete gamma special cases") {
  // P(1,x) = 1 - e^-x.
  for (double x : {0.1, 1.0, 3.0, 10.0})
    CHECK(reg_gamma_p(1.0, x) == doctest::Approx(-std::expm1(-x)).epsilon(1e-12));
  // P(1/2, x) = erf(sqrt(x)).
  for (double x : {0.2, 1.0, 4.0})
    CHECK(reg_gamma_p(0.5, x) == doctest::Approx(std::erf(std::sqrt(x))).epsilon(1e-12));
  CHECK(reg_gamma_p(2.0, 0.0) == 0.0);
  CHECK(reg_gamma_q(2.0, 0.0) == 1.0);
  CHECK(reg_gamma_p(3.0, 40.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gamma and exponential cdfs") {
  CHECK(exp_cdf(2.0, 2.0) == doctest::Approx(-std::expm1(-1.0)).epsilon(1e-14));
  CHECK(gamma_cdf(1.5, 1.0, 2.0) == doctest::Approx(-std::expm1(-3.0)).epsilon(1e-12));
}

TEST_CASE("kolmogorov tail") {
  // Classical table values of the limiting distribution.
  CHECK(kolmogorov_sf(1.3581) == doctest::Approx(0.05).epsilon(2e-3));
  CHECK(kolmogorov_sf(1.6276) == doctest::Approx(0.01).epsilon(2e-2));
  CHECK(kolmogorov_sf(0.05) == 1.0);
}

TEST_CASE("ks statistic on exact quantiles is small") {
  std::vector<double> cdf;
  std::size_t n = 1000;
  for (std::size_t i = 0; i < n; ++i)
    cdf.push_back((static_cast<double>(i) + 0.5) / static_cast<double>(n));
  CHECK(ks_statistic(cdf) == doctest::Approx(0.5 / static_cast<double>(n)).epsilon(1e-9));
}

TEST_CASE("ks on uniform draws behaves like its null") {
  Philox rng(99, 0);
  std::vector<double> sorted;
  for (int i = 0; i < 20000; ++i) sorted.push_back(rng.uniform());
  std::sort(sorted.begin(), sorted.end());
  double d = ks_statistic(sorted);  // identity cdf
  CHECK(ks_pvalue(d, sorted.size()) > 0.005);
  CHECK(d < 0.02);
}

TEST_CASE("two-sample ks") {
  std::vector<double> a, b;
  Philox rng(100, 0);
  for (int i = 0; i < 4000; ++i) {
    a.push_back(rng.uniform());
    b.push_back(rng.uniform());
  }
  double d = ks_two_sample(a, b);
  CHECK(ks_two_sample_pvalue(d, a.size(), b.size()) > 0.005);
  std::vector<double> c = a;
  for (double& x : c) x += 0.2;
  CHECK(ks_two_sample(a, c) > 0.15);
}

TEST_CASE("tv distance and empirical pmf") {
  CHECK(tv_distance({0.5, 0.5}, {0.5, 0.5}) == 0.0);
  CHECK(tv_distance({1.0, 0.0}, {0.0, 1.0}) == 1.0);
  std::vector<int> vals{0, 1, 1, 2};
  auto pmf = empirical_pmf(vals, 3);
  CHECK(pmf[1] == doctest::Approx(0.5));
  CHECK(pmf[3] == 0.0);
}

TEST_CASE("chi-square gof calibration") {
  // Counts drawn from the reference pmf should not reject.
  Philox rng(101, 0);
  std::vector<double> pmf{0.4, 0.3, 0.2, 0.1};
  std::vector<long> counts(4, 0);
  for (int i = 0; i < 20000; ++i) {
    double u = rng.uniform(), acc = 0.0;
    for (std::size_t k = 0; k < pmf.size(); ++k) {
      acc += pmf[k];
      if (u < acc) {
        counts[k] += 1;
        break;
      }
    }
  }
  CHECK(chi2_gof_pvalue(counts, pmf) > 0.005);
  // A clearly wrong reference rejects.
  std::vector<double> wrong{0.1, 0.2, 0.3, 0.4};
  CHECK(chi2_gof_pvalue(counts, wrong) < 1e-6);
}

TEST_CASE("summaries") {
  Summary s = summarize({1.0, 2.0, 3.0, 4.0});
  CHECK(s.mean == doctest::Approx(2.5));
  CHECK(s.variance == doctest::Approx(5.0 / 3.0));
}

TEST_CASE("philox streams are deterministic and distinct") {
  Philox a(42, 7), b(42, 7), c(42, 8);
  bool same = true, differ = false;
  for (int i = 0; i < 64; ++i) {
    auto x = a.next_u64(), y = b.next_u64(), z = c.next_u64();
    same = same && x == y;
    differ = differ || x != z;
  }
  CHECK(same);
  CHECK(differ);
}

TEST_CASE("sampler moments") {
  Philox rng(7, 1);
  std::vector<double> g;
  for (int i = 0; i < 40000; ++i) g.push_back(rng.gamma(2.3, 1.5));
  Summary s = summarize(g);
  CHECK(std::fabs(s.mean - 2.3 / 1.5) < 4.0 * s.std_error);
  CHECK(s.variance == doctest::Approx(2.3 / 2.25).epsilon(0.05));

  std::vector<double> p;
  for (int i = 0; i < 40000; ++i) p.push_back(static_cast<double>(rng.poisson(37.5)));
  Summary sp = summarize(p);
  CHECK(std::fabs(sp.mean - 37.5) < 4.0 * sp.std_error);
  CHECK(sp.variance == doctest::Approx(37.5).epsilon(0.05));

  std::vector<double> b;
  for (int i = 0; i < 40000; ++i) b.push_back(rng.beta(0.5, 1.5));
  Summary sb = summarize(b);
  CHECK(std::fabs(sb.mean - 0.25) < 4.0 * sb.std_error);
}

TEST_CASE("large-mean poisson sampler is calibrated") {
  Philox rng(8, 2);
  // Moments at a large mean.
  std::vector<double> big;
  for (int i = 0; i < 30000; ++i) big.push_back(static_cast<double>(rng.poisson(2500.0)));
  Summary s = summarize(big);
  CHECK(std::fabs(s.mean - 2500.0) < 4.0 * s.std_error);
  CHECK(s.variance == doctest::Approx(2500.0).epsilon(0.05));
  // Exact pmf fit just above the method switch.
  double mu = 40.0;
  std::vector<long> counts(120, 0);
  for (int i = 0; i < 50000; ++i) {
    long k = rng.poisson(mu);
    if (k < 120) counts[static_cast<std::size_t>(k)] += 1;
  }
  std::vector<double> pmf(120);
  for (int k = 0; k < 120; ++k)
    pmf[static_cast<std::size_t>(k)] =
        std::exp(k * std::log(mu) - mu - std::lgamma(k + 1.0));
  CHECK(chi2_gof_pvalue(counts, pmf) > 0.005);
}
