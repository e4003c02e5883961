#include "latmut/ancestry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace latmut {

const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::Coal1: return "coal1";
    case EventKind::Mut1: return "mut1";
    case EventKind::Coal2: return "coal2";
    case EventKind::Mut2: return "mut2";
  }
  return "?";
}

int AncestryEventLog::count(EventKind k) const {
  int c = 0;
  for (const auto& e : events) c += e.kind == k ? 1 : 0;
  return c;
}

double AncestryEventLog::jump_time_type1(int i) const {
  int seen = 0;
  for (const auto& e : events) {
    if (e.kind == EventKind::Coal1 || e.kind == EventKind::Mut1) {
      if (++seen == i) return e.time;
    }
  }
  throw std::out_of_range("jump_time_type1: fewer type-1 jumps than requested");
}

void AncestryEventLog::check_invariants(const SampleCounts& counts, bool both_types) const {
  double last = -1.0;
  int a1 = static_cast<int>(counts.n1), a2 = static_cast<int>(counts.n2);
  int l1 = 0, l2 = 0;
  for (const auto& e : events) {
    if (!(e.time > last)) throw std::logic_error("event log: times not strictly increasing");
    last = e.time;
    switch (e.kind) {
      case EventKind::Coal1: a1 -= 1; break;
      case EventKind::Mut1: a1 -= 1; l1 += 1; break;
      case EventKind::Coal2: a2 -= 1; break;
      case EventKind::Mut2: a2 -= 1; l2 += 1; break;
    }
    if (a1 < 0 || a2 < 0) throw std::logic_error("event log: lineage count went negative");
    if (e.after.a1 != a1 || e.after.l1 != l1 ||
        (both_types && (e.after.a2 != a2 || e.after.l2 != l2)))
      throw std::logic_error("event log: recorded state inconsistent with event kinds");
  }
  if (complete) {
    if (count(EventKind::Mut1) + count(EventKind::Coal1) != counts.n1)
      throw std::logic_error("event log: type-1 events do not account for n1");
    if (both_types && count(EventKind::Mut2) + count(EventKind::Coal2) != counts.n2)
      throw std::logic_error("event log: type-2 events do not account for n2");
  }
}

std::pair<int, int> latent_counts(const AncestryEventLog& log) {
  if (!log.complete)
    throw std::logic_error("latent_counts: log is incomplete: " + log.error);
  return {log.count(EventKind::Mut1), log.count(EventKind::Mut2)};
}

namespace {

struct Rates {
  double coal1 = 0.0, mut1 = 0.0, coal2 = 0.0, mut2 = 0.0;
  double type1() const { return coal1 + mut1; }
  double type2() const { return coal2 + mut2; }
  double total() const { return type1() + type2(); }
};

// At frequency p: type-1 coalescence binom(a1,2)/p, type-1 latent mutation
// a1 theta1 (1-p)/(2p); type-2 with p replaced by 1-p and theta2.
Rates event_rates(int a1, int a2, double p, const ModelParams& par) {
  Rates r;
  if (a1 > 0) {
    r.coal1 = 0.5 * a1 * (a1 - 1.0) / p;
    r.mut1 = 0.5 * a1 * par.theta1 * (1.0 - p) / p;
  }
  if (a2 > 0) {
    double q = 1.0 - p;
    r.coal2 = 0.5 * a2 * (a2 - 1.0) / q;
    r.mut2 = 0.5 * a2 * par.theta2 * p / q;
  }
  return r;
}

struct EngineState {
  int a1, a2, l1 = 0, l2 = 0;
  AncestryEventLog log;
  long steps = 0;
};

void record(EngineState& st, double time, EventKind kind, double freq) {
  switch (kind) {
    case EventKind::Coal1: st.a1 -= 1; break;
    case EventKind::Mut1: st.a1 -= 1; st.l1 += 1; break;
    case EventKind::Coal2: st.a2 -= 1; break;
    case EventKind::Mut2: st.a2 -= 1; st.l2 += 1; break;
  }
  st.log.events.push_back({time, kind, freq, {st.a1, st.l1, st.a2, st.l2}});
}

// Picks the fired event among the four channels proportionally to rate.
EventKind pick_event(const Rates& r, Philox& rng) {
  double u = rng.uniform() * r.total();
  if (u < r.coal1) return EventKind::Coal1;
  u -= r.coal1;
  if (u < r.mut1) return EventKind::Mut1;
  u -= r.mut1;
  if (u < r.coal2) return EventKind::Coal2;
  return EventKind::Mut2;
}

// Long quiescent stretches at stationarity: the event rate is far below the
// path mixing rate, so the hazard over a window well above the mixing time is
// the window length times the rate at independent stationary marginals. The
// window length is fixed from a pre-pass rate estimate (never from the draws
// that decide survival), keeping the compounded law unbiased; the expected
// hazard per window stays at hazard_window_cap, so the frozen-rate bias is
// O(cap) relative.
bool fast_forward(EngineState& st, const ModelParams& par,
                  FrequencyPathSource& path, Philox& rng, const AncestrySimOptions& opts,
                  double& t) {
  const int m = std::min(64, std::max(1, opts.window_subdraws));
  double rate_scale = 0.0;
  for (int i = 0; i < 64; ++i) {
    double p = path.stationary_draw(rng);
    rate_scale += event_rates(st.a1, st.a2, p, par).total();
  }
  rate_scale /= 64.0;
  if (!(rate_scale > 0.0)) return false;
  double window = opts.hazard_window_cap / rate_scale;

  while (st.a1 > 0 || st.a2 > 0) {
    if (t > opts.horizon_cap) return false;
    double ps[64];
    double rates[64];
    double rate_sum = 0.0;
    for (int i = 0; i < m; ++i) {
      ps[i] = path.stationary_draw(rng);
      rates[i] = event_rates(st.a1, st.a2, ps[i], par).total();
      rate_sum += rates[i];
    }
    double hazard = rate_sum * window / m;
    double u = rng.uniform();
    if (u < -std::expm1(-hazard)) {
      // Truncated-exponential position within the window; the responsible
      // marginal draw is picked proportionally to its rate share.
      double frac = -std::log1p(-u) / hazard;
      double pick = rng.uniform() * rate_sum;
      int which = m - 1;
      double acc = 0.0;
      for (int i = 0; i < m; ++i) {
        acc += rates[i];
        if (pick < acc) {
          which = i;
          break;
        }
      }
      double p = ps[which];
      Rates r = event_rates(st.a1, st.a2, p, par);
      t += frac * window;
      record(st, t, pick_event(r, rng), p);
    } else {
      t += window;
    }
  }
  return true;
}

}  // namespace

AncestryEventLog simulate_conditional_ancestry(const SampleCounts& counts,
                                               const ModelParams& params,
                                               FrequencyPathSource& path, Philox& rng,
                                               TrackMode track,
                                               const AncestrySimOptions& opts) {
  counts.validate();
  params.validate();
  EngineState st;
  st.a1 = static_cast<int>(counts.n1);
  st.a2 = track == TrackMode::Both ? static_cast<int>(counts.n2) : 0;

  const double t_relax =
      std::max(opts.relax_time_floor, opts.relax_time_scale / (1.0 + std::fabs(params.beta)));
  double t = path.current_time();

  auto fail = [&](const std::string& why) {
    st.log.complete = false;
    st.log.error = why;
    return st.log;
  };

  while (st.a1 > 0 || st.a2 > 0) {
    if (t > opts.horizon_cap) return fail("horizon cap exceeded");
    if (opts.max_steps > 0 && st.steps > opts.max_steps) return fail("step cap exceeded");
    if (path.exhausted()) return fail("path exhausted before absorption");

    double p = path.current_freq();
    // Exact boundary hit with live lineages on the wrong side: refine the path.
    if ((st.a1 > 0 && p <= 0.0) || (st.a2 > 0 && p >= 1.0)) {
      bool fixed = false;
      for (int tries = 0; tries < 40; ++tries) {
        if (!path.refine_last()) break;
        p = path.current_freq();
        if (!((st.a1 > 0 && p <= 0.0) || (st.a2 > 0 && p >= 1.0))) {
          fixed = true;
          break;
        }
      }
      if (!fixed) return fail("frequency pinned at a boundary incompatible with the state");
      t = path.current_time();
    }

    Rates r = event_rates(st.a1, st.a2, p, params);
    double total = r.total();

    if (opts.allow_fast_forward && path.stationary_refresh_available() && t >= t_relax &&
        total < opts.quiescent_rate_eps) {
      if (fast_forward(st, params, path, rng, opts, t)) break;
      return fail("horizon cap exceeded during fast-forward");
    }

    double max_dt = total > 0.0 ? opts.event_cap / total : 1e30;
    auto step = path.advance(std::min(max_dt, opts.horizon_cap));
    ++st.steps;
    if (step.h <= 0.0) continue;  // exhausted; caught on next loop

    // Resolve events within the frozen interval [t, t + h).
    double off = 0.0;
    for (;;) {
      Rates rr = event_rates(st.a1, st.a2, step.freq, params);
      double lam = rr.total();
      if (lam <= 0.0) break;
      double gap = rng.exponential(lam);
      if (off + gap >= step.h) break;
      off += gap;
      record(st, t + off, pick_event(rr, rng), step.freq);
      if (st.a1 == 0 && st.a2 == 0) break;
    }
    t += step.h;
  }

  st.log.complete = true;
  st.log.check_invariants(counts, track == TrackMode::Both);
  return st.log;
}

double EwensAllelesPmf::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < pmf.size(); ++i) m += static_cast<double>(i + 1) * pmf[i];
  return m;
}

void EwensAllelesPmf::validate() const {
  double s = 0.0;
  for (double p : pmf) {
    if (p < 0.0) throw std::logic_error("EwensAllelesPmf: negative mass");
    s += p;
  }
  if (std::fabs(s - 1.0) > 1e-12) throw std::logic_error("EwensAllelesPmf: mass not 1");
  if (static_cast<int>(pmf.size()) != n) throw std::logic_error("EwensAllelesPmf: bad support");
}

namespace {

// Convolve a deterministic +1 with independent Bernoulli(p_k) increments.
std::vector<double> convolve_bernoullis(const std::vector<double>& probs) {
  std::vector<double> pmf(probs.size() + 1, 0.0);
  pmf[0] = 1.0;
  std::size_t hi = 0;
  for (double p : probs) {
    ++hi;
    for (std::size_t k = hi; k >= 1; --k) pmf[k] = pmf[k] * (1.0 - p) + pmf[k - 1] * p;
    pmf[0] *= 1.0 - p;
  }
  return pmf;  // pmf[j] = P(sum = j)
}

}  // namespace

EwensAllelesPmf ewens_alleles_pmf(int n, double theta) {
  if (n < 1) throw std::domain_error("ewens_alleles_pmf: need n >= 1");
  if (!(theta > 0.0)) throw std::domain_error("ewens_alleles_pmf: need theta > 0");
  std::vector<double> probs;
  for (int j = 2; j <= n; ++j) probs.push_back(theta / (theta + j - 1.0));
  std::vector<double> sums = convolve_bernoullis(probs);  // j = 0..n-1 extra alleles
  EwensAllelesPmf out;
  out.n = n;
  out.theta = theta;
  out.pmf = sums;  // shift by the deterministic xi_1 = 1
  out.validate();
  return out;
}

std::vector<double> bernoulli_k1_pmf(const std::vector<double>& jump_freqs, int n1,
                                     double theta1) {
  if (n1 < 1) throw std::domain_error("bernoulli_k1_pmf: need n1 >= 1");
  if (static_cast<int>(jump_freqs.size()) != n1 - 1)
    throw std::invalid_argument("bernoulli_k1_pmf: need n1 - 1 jump frequencies");
  std::vector<double> probs;
  // xi_{n1} reads the first jump, ..., xi_2 the (n1-1)-th.
  for (int k = n1; k >= 2; --k) {
    double p = jump_freqs[static_cast<std::size_t>(n1 - k)];
    if (p < 0.0 || p >= 1.0 + 1e-12)
      throw std::invalid_argument("bernoulli_k1_pmf: frequencies must lie in [0,1)");
    double q1 = (1.0 - p) * theta1;
    probs.push_back(q1 / (q1 + k - 1.0));
  }
  std::vector<double> sums = convolve_bernoullis(probs);
  return sums;  // index j => P(K1 = 1 + j)
}

int bernoulli_k1_sample(const std::vector<double>& jump_freqs, int n1, double theta1,
                        Philox& rng) {
  std::vector<double> pmf = bernoulli_k1_pmf(jump_freqs, n1, theta1);
  double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t j = 0; j < pmf.size(); ++j) {
    acc += pmf[j];
    if (u < acc) return static_cast<int>(j) + 1;
  }
  return static_cast<int>(pmf.size());
}

AncestryEventLog rescaled_genealogy_sim(int n1, double theta1, ScaledSelection scaled,
                                        Philox& rng, const RescaledGenealogyOptions& opts) {
  if (n1 < 1) throw std::domain_error("rescaled_genealogy_sim: need n1 >= 1");
  if (!(theta1 > 0.0)) throw std::domain_error("rescaled_genealogy_sim: need theta1 > 0");
  if (!(scaled.beta_tilde < 1.0))
    throw std::domain_error("rescaled_genealogy_sim: needs beta_tilde < 1");

  ModelParams par{theta1, 1.0, 0.0};  // theta2 unused by the ZGen drift
  double z0 = rng.gamma(n1 + theta1, 1.0 - scaled.beta_tilde);
  CirStepper z(CirKind::ZGen, par, scaled, z0, CirScheme::ExactTransition, rng);

  AncestryEventLog log;
  int a1 = n1, l1 = 0;
  double t = 0.0;
  while (a1 > 0) {
    if (t > opts.horizon_cap) {
      log.complete = false;
      log.error = "horizon cap exceeded";
      return log;
    }
    double zz = z.z();
    if (zz <= 0.0) {
      // Brief boundary touch; the drift theta1/2 pulls away within a step.
      z.step(opts.dt);
      t += opts.dt;
      continue;
    }
    // Below this scale the next event is immediate on any observable
    // timescale, and the mutation split is frequency-free anyway.
    zz = std::max(zz, 1e-14);
    double lam = 0.5 * a1 * (theta1 + a1 - 1.0) / zz;
    double h = std::min(opts.dt, opts.event_cap / lam);
    double gap = rng.exponential(lam);
    if (gap < h) {
      t += gap;
      bool mut = rng.uniform() < theta1 / (theta1 + a1 - 1.0);
      a1 -= 1;
      l1 += mut ? 1 : 0;
      log.events.push_back({t, mut ? EventKind::Mut1 : EventKind::Coal1, zz, {a1, l1, 0, 0}});
      // The frequency is frozen over the step; no need to advance z mid-step.
      continue;
    }
    z.step(h);
    t += h;
  }
  log.complete = true;
  return log;
}

}  // namespace latmut
