#include <cmath>

#include "doctest.h"
#include "latmut/ancestry.hpp"
#include "latmut/asg.hpp"
#include "latmut/diffusion.hpp"
#include "latmut/quadrature.hpp"
#include "latmut/stats.hpp"
#include "test_helpers.hpp"

using namespace latmut;
using latmut::testing::rel_diff;

namespace {
const PimParams kPim{0.4, 0.5, 0.5};
}

TEST_CASE("ordered configuration probabilities") {
  CHECK(log_qo(0, 0, 0, 0, kPim, -2.0) == doctest::Approx(0.0).epsilon(1e-12));
  // Relation to the sampling probability: the binomial coefficient is the
  // number of orderings.
  ModelParams par = kPim.to_model(-2.0);
  double lhs = log_qo(2, 3, 0, 0, kPim, -2.0);
  double rhs = log_sampling_prob({2, 3}, par) - log_choose(5, 2);
  CHECK(std::fabs(lhs - rhs) < 1e-12);
  // Frozen extended-precision value.
  CHECK(log_qo(2, 3, 1, 0, kPim, -2.0) ==
        doctest::Approx(-6.2228001142690361043).epsilon(1e-12));
  // Quadrature oracle.
  double lq = log_norm_const(par) +
              log_tilted_beta_integral(par.theta1 + 3, par.theta2 + 3, -2.0);
  CHECK(std::fabs(lq - lhs) < 1e-9);
}

TEST_CASE("reduced rates: neutral limit of the mutation entry") {
  // As beta -> 0- the q_o ratios become beta-function ratios.
  AsgState s{2, 3, 0, 0};
  RateTable tab = reduced_rates(s, kPim, -1e-7);
  double t1 = kPim.theta1(), t2 = kPim.theta2();
  double lr = (std::lgamma(t1 + 1) + std::lgamma(t2 + 4)) -
              (std::lgamma(t1 + 2) + std::lgamma(t2 + 3));
  double expected = 2.0 * 0.5 * t1 * std::exp(lr);
  CHECK(tab.find("latent-mutation-1").rate == doctest::Approx(expected).epsilon(1e-5));
}

TEST_CASE("reduced rates: coalescence entry against quadrature") {
  PimParams pim{0.6, 0.5, 0.5};
  double beta = 1.3;
  AsgState s{2, 0, 0, 0};
  RateTable tab = reduced_rates(s, pim, beta);
  ModelParams par = pim.to_model(beta);
  double lq1 = log_norm_const(par) +
               log_tilted_beta_integral(par.theta1 + 1, par.theta2, beta);
  double lq2 = log_norm_const(par) +
               log_tilted_beta_integral(par.theta1 + 2, par.theta2, beta);
  CHECK(tab.find("coalescence-1").rate == doctest::Approx(std::exp(lq1 - lq2)).epsilon(1e-8));
}

TEST_CASE("harmonicity: conditional rates resum to the unconditional total") {
  for (double beta : {-1.0, 1.3}) {
    PimParams pim{0.5, 0.5, 0.5};
    for (long r1 = 0; r1 <= 4; ++r1)
      for (long r2 = 0; r2 <= 4 - r1; ++r2)
        for (long v = 0; v <= 4 - r1 - r2; ++v) {
          if (r1 + r2 + v == 0) continue;
          AsgState s = beta < 0 ? AsgState{r1, r2, v, 0} : AsgState{r1, r2, 0, v};
          RateTable tab = full_rates(s, pim, beta);
          double sum = 0.0;
          for (const auto& e : tab.entries) sum += e.rate;
          CHECK(rel_diff(sum, tab.total_unconditional) < 1e-10);
        }
  }
}

TEST_CASE("full table has the twenty-two weighted transitions") {
  RateTable tab = full_rates({2, 2, 1, 1}, kPim, -1.5);
  CHECK(tab.entries.size() == 22);
  double R = 6.0;
  CHECK(tab.total_unconditional ==
        doctest::Approx(0.5 * R * (kPim.theta + 1.5 + R - 1.0)).epsilon(1e-14));
  for (const auto& e : tab.entries) CHECK(e.rate >= 0.0);
}

TEST_CASE("collapse of the full table reproduces the reduced process") {
  CHECK(collapse_worst_rel_err({2, 2, 1, 0}, {0.6, 0.5, 0.5}, -1.5) < 1e-10);
  CHECK(collapse_worst_rel_err({2, 3, 1, 0}, {0.5, 0.5, 0.5}, -1.0) < 1e-10);
  CHECK(collapse_worst_rel_err({3, 1, 0, 2}, {0.5, 0.5, 0.5}, 2.0) < 1e-10);
  CHECK(collapse_worst_rel_err({1, 4, 0, 0}, {0.8, 0.3, 0.7}, 0.9) < 1e-10);
}

TEST_CASE("sign flip with label swap maps the tables onto each other") {
  PimParams pim{0.5, 0.3, 0.7};
  PimParams swapped{0.5, 0.7, 0.3};
  AsgState s{2, 3, 1, 0};
  AsgState ms{3, 2, 0, 1};
  RateTable a = full_rates(s, pim, -1.5);
  RateTable b = full_rates(ms, swapped, 1.5);
  REQUIRE(a.entries.size() == b.entries.size());
  // Compare as multisets of rates.
  std::vector<double> ra, rb;
  for (const auto& e : a.entries) ra.push_back(e.rate);
  for (const auto& e : b.entries) rb.push_back(e.rate);
  std::sort(ra.begin(), ra.end());
  std::sort(rb.begin(), rb.end());
  for (std::size_t i = 0; i < ra.size(); ++i) CHECK(rel_diff(ra[i], rb[i]) < 1e-10);
}

TEST_CASE("asymptotic rate tables") {
  PimParams pim{0.5, 0.5, 0.5};
  // Scaled sub-critical mutation entry matches its closed form.
  {
    AsgState s{2, 1000, 1, 0};
    double bt = -0.5;
    RateTable tab = asym_rates(s, pim, AsgRegime::ScaledNeg, bt * 1000.0);
    double t1 = pim.theta1();
    double expected = 2.0 * (1000.0 * (1.0 + 0.5) / 2.0) * t1 / (t1 + 2 + 1 - 1);
    CHECK(tab.find("latent-mutation-1").rate == doctest::Approx(expected).epsilon(1e-12));
  }
  // Super-critical coalescence entry.
  {
    AsgState s{3, 500, 0, 0};
    RateTable tab = asym_rates(s, pim, AsgRegime::ScaledGt1, 2.0 * 500.0);
    CHECK(tab.find("coalescence-1").rate == doctest::Approx(3.0 * 2.0).epsilon(1e-12));
  }
  // Strong-selection table converges to the exact reduced rates at first order.
  {
    AsgState s{2, 3, 0, 0};
    auto worst = [&](double beta) {
      RateTable approx = asym_rates(s, pim, AsgRegime::StrongNeg, beta);
      RateTable exact = reduced_rates(s, pim, beta);
      double w = 0.0;
      for (const auto& e : approx.entries)
        w = std::max(w, rel_diff(e.rate, exact.find(e.label).rate));
      return w;
    };
    double e400 = worst(-400.0), e800 = worst(-800.0);
    CHECK(e400 / e800 == doctest::Approx(2.0).epsilon(0.3));
  }
  CHECK_THROWS_AS(asym_rates({2, 3, 0, 0}, pim, AsgRegime::StrongNeg, 5.0),
                  std::invalid_argument);
}

TEST_CASE("asg simulation basics") {
  PimParams pim{1.0, 0.5, 0.5};
  // No type-1 samples: no latent type-1 mutations.
  {
    Philox rng(61, 0);
    for (int r = 0; r < 200; ++r) {
      AsgRunResult res = simulate_asg({0, 4}, pim, -1.0, rng);
      CHECK(res.k1 == 0);
    }
  }
  // A singleton run stops immediately with the terminal convention.
  {
    Philox rng(62, 0);
    AsgRunResult res = simulate_asg({1, 0}, pim, -1.0, rng);
    CHECK(res.k1 == 1);
    CHECK(res.jumps == 0);
  }
}

TEST_CASE("strong positive selection in the graph: coalescence first") {
  PimParams pim{1.0, 0.5, 0.5};
  Philox rng(63, 0);
  long ones = 0, coal_first = 0;
  const int reps = 2000;
  for (int r = 0; r < reps; ++r) {
    AsgRunResult res = simulate_asg({2, 2}, pim, 800.0, rng);
    ones += res.k1 == 1 ? 1 : 0;
    coal_first += res.latent_mut1_events == 0 ? 1 : 0;
  }
  CHECK(static_cast<double>(ones) / reps >= 0.97);
  CHECK(static_cast<double>(coal_first) / reps >= 0.97);
}

TEST_CASE("virtual lineages fade as selection strengthens") {
  PimParams pim{1.0, 0.5, 0.5};
  double prev = 1e9;
  for (double beta : {-50.0, -200.0, -800.0}) {
    Philox rng(64, static_cast<std::uint64_t>(-beta));
    std::vector<double> mv;
    for (int r = 0; r < 2000; ++r)
      mv.push_back(simulate_asg({2, 2}, pim, beta, rng).mean_virtual);
    double m = summarize(mv).mean;
    CHECK(m < prev);
    prev = m;
  }
}

TEST_CASE("graph and random-background latent counts agree") {
  PimParams pim{1.0, 0.5, 0.5};
  const double beta = -1.0;
  const ModelParams par = pim.to_model(beta);
  const SampleCounts counts{2, 2};
  const int reps = 20000;
  std::vector<long> asg_hist(3, 0), rb_hist(3, 0);
  WfOptions wf;
  for (int r = 0; r < reps; ++r) {
    Philox rng(65, static_cast<std::uint64_t>(r));
    asg_hist[static_cast<std::size_t>(simulate_asg(counts, pim, beta, rng).k1)] += 1;
    Philox rng2(66, static_cast<std::uint64_t>(r));
    ReversedStationaryPathSource path(counts, par, wf, rng2);
    AncestryEventLog log =
        simulate_conditional_ancestry(counts, par, path, rng2, TrackMode::Type1Only);
    rb_hist[static_cast<std::size_t>(latent_counts(log).first)] += 1;
  }
  std::vector<double> pa, pb;
  for (int k = 1; k <= 2; ++k) {
    pa.push_back(static_cast<double>(asg_hist[static_cast<std::size_t>(k)]) / reps);
    pb.push_back(static_cast<double>(rb_hist[static_cast<std::size_t>(k)]) / reps);
  }
  CHECK(tv_distance(pa, pb) < 0.05);
}

TEST_CASE("state validation") {
  CHECK_THROWS_AS(reduced_rates({2, 2, 0, 1}, kPim, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(reduced_rates({2, 2, 1, 0}, kPim, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(log_qo(-1, 0, 0, 0, kPim, 1.0), std::domain_error);
  PimParams bad{1.0, 0.4, 0.4};
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
}
