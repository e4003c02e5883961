#include <cmath>

#include "doctest.h"
#include "latmut/diffusion.hpp"
#include "latmut/quadrature.hpp"
#include "latmut/stats.hpp"
#include "test_helpers.hpp"

using namespace latmut;
using latmut::testing::ks_vs_log_pdf;

TEST_CASE("absorbing boundaries without mutation") {
  Philox rng(21, 0);
  for (double x0 : {0.0, 1.0}) {
    FrequencyPath p = simulate_wf({0.0, 0.0, 0.0}, x0, 1e-3, 0.2, rng);
    for (double v : p.values) CHECK(v == x0);
  }
}

TEST_CASE("one-step drift") {
  ModelParams par{0.2, 0.4, 1.5};
  double x0 = 0.3, dt = 1e-3;
  double expected =
      0.5 * (par.theta1 * (1.0 - x0) - par.theta2 * x0 + par.beta * x0 * (1.0 - x0)) * dt;
  Philox rng(22, 0);
  std::vector<double> incr;
  WfOptions opts;
  opts.dt = dt;
  for (int i = 0; i < 200000; ++i) {
    WfStepper st(par, x0, opts, rng);
    st.step(dt);
    incr.push_back(st.x() - x0);
  }
  Summary s = summarize(incr);
  CHECK(std::fabs(s.mean - expected) < 3.0 * s.std_error + 10.0 * dt * dt);
}

TEST_CASE("paths stay inside the unit interval") {
  Philox rng(23, 0);
  FrequencyPath p = simulate_wf({0.1, 0.1, -8.0}, 0.5, 1e-3, 5.0, rng);
  p.validate();
}

TEST_CASE("unit demography reproduces the constant-size stepper exactly") {
  ModelParams par{0.4, 0.6, 2.0};
  Demography demog = Demography::constant(1.0, 1.0);
  Philox rng_a(24, 5), rng_b(24, 5);
  FrequencyPath a = simulate_wf(par, 0.4, 1e-3, 1.0, rng_a);
  FrequencyPath b = simulate_wf_varying(par, demog, 0.4, 1e-3, rng_b);
  REQUIRE(a.values.size() == b.values.size());
  for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(a.values[i] == b.values[i]);
}

TEST_CASE("population size scales the diffusion term") {
  ModelParams par{1.0, 1.0, 0.0};
  double dt = 1e-3, x0 = 0.5;
  auto step_var = [&](double rho) {
    Demography demog = Demography::constant(1.0, rho);
    Philox rng(25, static_cast<std::uint64_t>(rho * 100));
    std::vector<double> incr;
    WfOptions opts;
    opts.dt = dt;
    for (int i = 0; i < 100000; ++i) {
      WfStepper st(par, x0, opts, rng, &demog);
      st.step(dt);
      incr.push_back(st.x() - x0);
    }
    return summarize(incr).variance;
  };
  double v1 = step_var(1.0), v4 = step_var(4.0);
  CHECK(v1 / v4 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("ramp demography matches the instantaneous variance") {
  ModelParams par{1.0, 1.0, 0.0};
  Demography demog = Demography::ramp(2.0, 1.0, 3.0);  // rho(t) = 1 + t
  double dt = 1e-3;
  for (double t_check : {0.0, 1.0}) {
    Philox rng(26, static_cast<std::uint64_t>(t_check));
    std::vector<double> scaled_sq;
    for (int i = 0; i < 50000; ++i) {
      WfOptions opts;
      opts.dt = dt;
      WfStepper st(par, 0.5, opts, rng, &demog);
      while (st.t() < t_check - 1e-12) st.step(t_check - st.t());
      double x = st.x();
      if (x < 0.05 || x > 0.95) continue;
      double drift = 0.5 * (par.theta1 * (1.0 - x) - par.theta2 * x);
      st.step(dt);
      double noise = st.x() - x - drift * dt;
      scaled_sq.push_back(noise * noise / (x * (1.0 - x)));
    }
    Summary s = summarize(scaled_sq);
    double expected = dt / demog.rho(t_check);
    CHECK(std::fabs(s.mean - expected) < 3.0 * s.std_error);
  }
}

TEST_CASE("stationary marginal is preserved") {
  ModelParams par{0.3, 0.3, 1.0};
  Philox rng(27, 0);
  WfOptions opts;
  opts.dt = 5e-4;
  opts.boundary_floor = 1e-6;
  std::vector<double> at_t;
  for (int i = 0; i < 4000; ++i) {
    double x0 = posterior_sample({0, 0}, par, rng);
    WfStepper st(par, x0, opts, rng);
    while (st.t() < 5.0) st.step(5.0 - st.t());
    at_t.push_back(std::min(1.0 - 1e-12, std::max(1e-12, st.x())));
  }
  auto log_pdf = [&](double x) {
    return (par.theta1 - 1.0) * std::log(x) + (par.theta2 - 1.0) * std::log1p(-x) +
           par.beta * x;
  };
  double d = ks_vs_log_pdf(at_t, log_pdf, 0.0, 1.0);
  CHECK(ks_pvalue(d, at_t.size()) > 0.01);
}

TEST_CASE("reversed stationary path starts from the posterior") {
  // With strong selection for the observed-minority sample, the start must be
  // far to the right: quadrature gives the exact posterior tail mass.
  ModelParams par{0.5, 0.5, 300.0};
  SampleCounts c{3, 7};
  CHECK(posterior_cdf(0.9, c, par) < 0.05);
  Philox rng(28, 0);
  int above = 0;
  const int reps = 2000;
  WfOptions opts;
  for (int i = 0; i < reps; ++i) {
    ReversedStationaryPathSource src(c, par, opts, rng);
    above += src.current_freq() > 0.9 ? 1 : 0;
  }
  CHECK(static_cast<double>(above) / reps > 0.95 - 3.0 * 0.005);
}

TEST_CASE("cir moments") {
  ModelParams par{0.7, 0.5, 0.0};
  double z0 = 1.2;
  // Transient mean and variance against the closed-form linear ODEs.
  for (CirScheme scheme : {CirScheme::FullTruncationEuler, CirScheme::ExactTransition}) {
    std::vector<double> at1;
    Philox rng(29, scheme == CirScheme::ExactTransition ? 1 : 0);
    for (int i = 0; i < 20000; ++i) {
      CirStepper st(CirKind::QZero, par, {0.0}, z0, scheme, rng);
      double t = 0.0;
      while (t < 1.0 - 1e-12) {
        double h = std::min(scheme == CirScheme::ExactTransition ? 0.25 : 1e-3, 1.0 - t);
        st.step(h);
        t += h;
      }
      at1.push_back(st.z());
    }
    Summary s = summarize(at1);
    double m = par.theta2 + (z0 - par.theta2) * std::exp(-0.5);
    double v = par.theta2 * (1.0 - std::exp(-1.0)) +
               2.0 * (z0 - par.theta2) * (std::exp(-0.5) - std::exp(-1.0));
    CHECK(std::fabs(s.mean - m) < 3.0 * s.std_error + 2e-3);
    CHECK(std::fabs(s.variance - v) < 0.05 * v);
  }
}

TEST_CASE("cir stationary laws") {
  // QZero settles at Gamma(theta2, 1); QTilde at Gamma(theta2, bt).
  ModelParams par{0.7, 0.5, 0.0};
  Philox rng(30, 0);
  std::vector<double> q0 = simulate_cir(CirKind::QZero, par, {0.0}, 0.5, 0.5, 200000.0,
                                        rng, CirScheme::ExactTransition);
  std::vector<double> tail(q0.begin() + 2000, q0.end());
  Summary s = summarize(tail);
  CHECK(std::fabs(s.mean - 0.5) < 0.01);
  CHECK(std::fabs(s.variance - 0.5) < 0.02);

  std::vector<double> qt = simulate_cir(CirKind::QTilde, par, {2.0}, 0.5, 0.5, 200000.0,
                                        rng, CirScheme::ExactTransition);
  std::vector<double> tail2(qt.begin() + 2000, qt.end());
  Summary s2 = summarize(tail2);
  CHECK(std::fabs(s2.mean - 0.25) < 0.005);

  CHECK_THROWS_AS(CirStepper(CirKind::ZGen, par, {1.5}, 0.0, CirScheme::ExactTransition, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(CirStepper(CirKind::QTilde, par, {-1.0}, 0.0, CirScheme::ExactTransition, rng),
                  std::invalid_argument);
}

TEST_CASE("cir values never go negative") {
  ModelParams par{0.2, 0.1, 0.0};
  Philox rng(31, 0);
  for (double v : simulate_cir(CirKind::QZero, par, {0.0}, 0.0, 1e-3, 20.0, rng))
    CHECK(v >= 0.0);
}

TEST_CASE("rescaled frequency matches its limit process") {
  // Rare-allele side at large n.
  {
    long n2 = 10000;
    ModelParams par{0.3, 0.5, -0.5 * static_cast<double>(n2)};
    auto stats = rescaled_frequency_check(par, {2, n2}, RescaledSide::Type1, {1.0}, 3000,
                                          1e-3, 777);
    const auto& s = stats[0];
    double gap = std::fabs(s.wf.mean - s.cir.mean);
    CHECK(gap < 3.0 * std::sqrt(s.wf.std_error * s.wf.std_error +
                                s.cir.std_error * s.cir.std_error) +
                    0.01 * s.cir.mean);
  }
  // Strong-selection side: beta q(t/beta) against the theta2-reverting process.
  {
    ModelParams par{0.5, 0.5, 1000.0};
    auto stats = rescaled_frequency_check(par, {2, 2}, RescaledSide::Type2, {2.0}, 3000,
                                          1e-3, 778);
    const auto& s = stats[0];
    double gap = std::fabs(s.wf.mean - s.cir.mean);
    CHECK(gap < 3.0 * std::sqrt(s.wf.std_error * s.wf.std_error +
                                s.cir.std_error * s.cir.std_error) +
                    0.01 * s.cir.mean);
  }
}

TEST_CASE("identical seeds give identical paths") {
  ModelParams par{0.3, 0.4, -2.0};
  Philox a(500, 9), b(500, 9), c(500, 10);
  FrequencyPath pa = simulate_wf(par, 0.3, 1e-3, 0.5, a);
  FrequencyPath pb = simulate_wf(par, 0.3, 1e-3, 0.5, b);
  FrequencyPath pc = simulate_wf(par, 0.3, 1e-3, 0.5, c);
  CHECK(pa.values == pb.values);
  CHECK(pa.values != pc.values);
}

TEST_CASE("conditioned path: no data accepts everything") {
  ModelParams par{0.5, 0.5, 0.0};
  Demography demog = Demography::constant(0.5, 1.0);
  Philox rng(32, 0);
  auto mu0 = [](Philox& r) { return 0.2 + 0.6 * r.uniform(); };
  ConditionedPath p = conditioned_varying_path({0, 0}, par, demog, mu0, 1e-3, rng);
  CHECK(p.attempts == 1);
  CHECK(p.backward_t.front() == 0.0);
  CHECK(p.backward_t.back() == doctest::Approx(0.5));
}

TEST_CASE("conditioned path at constant size recovers the posterior start") {
  ModelParams par{0.3, 0.4, -2.0};
  SampleCounts c{2, 5};
  Demography demog = Demography::constant(1.5, 1.0);
  Philox rng(33, 0);
  auto mu0 = [par](Philox& r) { return posterior_sample({0, 0}, par, r); };
  std::vector<double> p0;
  WfOptions opts;
  opts.boundary_floor = 1e-6;
  for (int i = 0; i < 3000; ++i) {
    ConditionedPath p = conditioned_varying_path(c, par, demog, mu0, 1e-3, rng, 1000000, opts);
    p0.push_back(std::min(1.0 - 1e-12, std::max(1e-12, p.freq.front())));
  }
  double a = par.theta1 + c.n1, b = par.theta2 + c.n2;
  auto log_pdf = [&](double x) {
    return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) + par.beta * x;
  };
  double d = ks_vs_log_pdf(p0, log_pdf, 0.0, 1.0);
  CHECK(ks_pvalue(d, p0.size()) > 0.01);
}

TEST_CASE("conditioned path: all-type-2 samples pull the endpoint down") {
  ModelParams par{0.5, 0.5, 0.0};
  Demography demog = Demography::constant(0.5, 1.0);
  Philox rng(34, 0);
  auto mu0 = [](Philox& r) { return 0.2 + 0.6 * r.uniform(); };
  std::vector<double> unconditioned, conditioned;
  for (int i = 0; i < 2000; ++i) {
    ConditionedPath u = conditioned_varying_path({0, 0}, par, demog, mu0, 1e-3, rng);
    unconditioned.push_back(u.freq.front());
    ConditionedPath v = conditioned_varying_path({0, 20}, par, demog, mu0, 1e-3, rng);
    conditioned.push_back(v.freq.front());
  }
  Summary su = summarize(unconditioned), sc = summarize(conditioned);
  CHECK(sc.mean + 3.0 * (sc.std_error + su.std_error) < su.mean);
}

TEST_CASE("demography validation") {
  CHECK_THROWS_AS(Demography::constant(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(Demography::ramp(1.0, 1.0, -2.0), std::invalid_argument);
  Demography d = Demography::ramp(2.0, 1.0, 3.0);
  CHECK(d.rho(0.0) == 1.0);
  CHECK(d.rho(1.0) == 2.0);
  CHECK(d.rho(5.0) == 3.0);
}
