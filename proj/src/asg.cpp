#include "latmut/asg.hpp"

#include <cmath>
#include <map>

#include "latmut/stats.hpp"
#include <stdexcept>

namespace latmut {

void PimParams::validate() const {
  if (!(theta > 0.0)) throw std::domain_error("PimParams: theta must be positive");
  if (!(pi1 > 0.0) || !(pi1 < 1.0) || !(pi2 > 0.0) || !(pi2 < 1.0))
    throw std::domain_error("PimParams: pi1 and pi2 must lie in (0,1)");
  if (std::fabs(pi1 + pi2 - 1.0) > 1e-12)
    throw std::domain_error("PimParams: pi1 + pi2 must equal 1");
}

double RateTable::total_active() const {
  double s = 0.0;
  for (const auto& e : entries)
    if (!e.null_event) s += e.rate;
  return s;
}

const RateEntry& RateTable::find(const std::string& label) const {
  for (const auto& e : entries)
    if (e.label == label) return e;
  throw std::out_of_range("RateTable: no entry labeled " + label);
}

double log_qo(long r1, long r2, long v1, long v2, const PimParams& pim, double beta) {
  if (r1 < 0 || r2 < 0 || v1 < 0 || v2 < 0)
    throw std::domain_error("log_qo: counts must be nonnegative");
  pim.validate();
  ModelParams par = pim.to_model(beta);
  double k1 = static_cast<double>(r1 + v1);
  double k2 = static_cast<double>(r2 + v2);
  double a = par.theta1 + k1;
  double b = par.theta2 + k2;
  LogValue f = hyp1f1({a, a + b, beta});
  return log_norm_const(par) + log_beta(a, b) + f.log_magnitude;
}

namespace {

double binom2(long k) { return 0.5 * static_cast<double>(k) * static_cast<double>(k - 1); }

// q_o ratio helper bound to a fixed (pim, beta) pair.
struct QoRatio {
  const PimParams* pim;
  double beta;
  double base;  // log_qo at the current state

  double operator()(const AsgState& to) const {
    return std::exp(log_qo(to.r1, to.r2, to.v1, to.v2, *pim, beta) - base);
  }
};

void check_reduced_state(const AsgState& s, double beta) {
  if (s.r1 < 0 || s.r2 < 0 || s.v1 < 0 || s.v2 < 0)
    throw std::domain_error("AsgState: counts must be nonnegative");
  if (beta < 0.0 && s.v2 != 0)
    throw std::invalid_argument("reduced process with beta < 0 carries only type-1 virtuals");
  if (beta > 0.0 && s.v1 != 0)
    throw std::invalid_argument("reduced process with beta > 0 carries only type-2 virtuals");
}

}  // namespace

RateTable reduced_rates(const AsgState& state, const PimParams& pim, double beta) {
  pim.validate();
  check_reduced_state(state, beta);
  if (beta == 0.0)
    throw std::invalid_argument("reduced_rates: beta must be nonzero (the virtual class is tied to its sign)");
  const double t1 = pim.theta1(), t2 = pim.theta2();
  const double ab = std::fabs(beta);
  const long r1 = state.r1, r2 = state.r2;
  const long v = beta < 0.0 ? state.v1 : state.v2;

  QoRatio qr{&pim, beta, log_qo(state.r1, state.r2, state.v1, state.v2, pim, beta)};
  auto with_v = [&](long nr1, long nr2, long nv) {
    return beta < 0.0 ? AsgState{nr1, nr2, nv, 0} : AsgState{nr1, nr2, 0, nv};
  };

  RateTable tab;
  tab.state = state;
  long total_lineages = r1 + r2 + v;
  tab.total_unconditional =
      0.5 * static_cast<double>(total_lineages) *
      (pim.theta + ab + static_cast<double>(total_lineages) - 1.0);

  if (r1 > 0)
    tab.entries.push_back({"latent-mutation-1", with_v(r1 - 1, r2 + 1, v),
                           r1 * 0.5 * t1 * qr(with_v(r1 - 1, r2 + 1, v)), false});
  if (r1 > 1)
    tab.entries.push_back({"coalescence-1", with_v(r1 - 1, r2, v),
                           binom2(r1) * qr(with_v(r1 - 1, r2, v)), false});
  if (total_lineages > 0)
    tab.entries.push_back({"branching", with_v(r1, r2, v + 1),
                           static_cast<double>(total_lineages) * 0.5 * ab *
                               qr(with_v(r1, r2, v + 1)),
                           false});
  if (v > 0) {
    double un = (beta < 0.0 ? v * 0.5 * t1 : v * 0.5 * t2) +
                static_cast<double>(beta < 0.0 ? r1 * v : r2 * v) + binom2(v);
    tab.entries.push_back(
        {"virtual-removal", with_v(r1, r2, v - 1), un * qr(with_v(r1, r2, v - 1)), false});
  }
  if (r2 > 0) {
    double un = r2 * 0.5 * t2 + binom2(r2);
    tab.entries.push_back(
        {"type2-removal", with_v(r1, r2 - 1, v), un * qr(with_v(r1, r2 - 1, v)), false});
  }
  tab.null_rate = beta < 0.0 ? r1 * 0.5 * t1 + r2 * 0.5 * ab : r1 * 0.5 * t1 + r1 * 0.5 * ab;
  return tab;
}

RateTable full_rates(const AsgState& state, const PimParams& pim, double beta) {
  pim.validate();
  if (state.r1 < 0 || state.r2 < 0 || state.v1 < 0 || state.v2 < 0)
    throw std::domain_error("AsgState: counts must be nonnegative");
  if (beta == 0.0) throw std::invalid_argument("full_rates: beta must be nonzero");
  const double t1 = pim.theta1(), t2 = pim.theta2();
  const double ab = std::fabs(beta);
  const long r1 = state.r1, r2 = state.r2, v1 = state.v1, v2 = state.v2;

  QoRatio qr{&pim, beta, log_qo(r1, r2, v1, v2, pim, beta)};
  RateTable tab;
  tab.state = state;
  long R = r1 + r2 + v1 + v2;
  tab.total_unconditional =
      0.5 * static_cast<double>(R) * (pim.theta + ab + static_cast<double>(R) - 1.0);

  auto add = [&](const std::string& label, AsgState to, double uncond_rate, bool null_ev) {
    if (uncond_rate <= 0.0) return;
    tab.entries.push_back({label, to, uncond_rate * (null_ev ? 1.0 : qr(to)), null_ev});
    if (null_ev) tab.null_rate += uncond_rate;
  };

  // Mutation events (empty self-loop plus actual move).
  add("mut-r1-empty", state, r1 * 0.5 * t1, true);
  add("mut-r1-latent", {r1 - 1, r2 + 1, v1, v2}, r1 * 0.5 * t1, false);
  add("mut-r2-empty", state, r2 * 0.5 * t2, true);
  add("mut-r2-actual", {r1 + 1, r2 - 1, v1, v2}, r2 * 0.5 * t2, false);
  add("mut-v1-empty", state, v1 * 0.5 * t1, true);
  add("mut-v1-actual", {r1, r2, v1 - 1, v2 + 1}, v1 * 0.5 * t1, false);
  add("mut-v2-empty", state, v2 * 0.5 * t2, true);
  add("mut-v2-actual", {r1, r2, v1 + 1, v2 - 1}, v2 * 0.5 * t2, false);

  // Branching resolutions depend on which allele is favored.
  if (beta < 0.0) {
    add("branch-r1-I1C1", {r1, r2, v1 + 1, v2}, r1 * 0.5 * ab, false);
    add("branch-r2-I1C2", {r1, r2, v1 + 1, v2}, r2 * 0.5 * ab, false);
    add("branch-r2-I2C1", {r1, r2, v1 + 1, v2}, r2 * 0.5 * ab, false);
    add("branch-r2-I2C2", {r1, r2, v1, v2 + 1}, r2 * 0.5 * ab, false);
    add("branch-v1-I1C1", {r1, r2, v1 + 1, v2}, v1 * 0.5 * ab, false);
    add("branch-v2-I1C2", {r1, r2, v1 + 1, v2}, v2 * 0.5 * ab, false);
    add("branch-v2-I2C1", {r1, r2, v1 + 1, v2}, v2 * 0.5 * ab, false);
    add("branch-v2-I2C2", {r1, r2, v1, v2 + 1}, v2 * 0.5 * ab, false);
  } else {
    add("branch-r1-I1C1", {r1, r2, v1 + 1, v2}, r1 * 0.5 * ab, false);
    add("branch-r1-I1C2", {r1, r2, v1, v2 + 1}, r1 * 0.5 * ab, false);
    add("branch-r1-I2C1", {r1, r2, v1, v2 + 1}, r1 * 0.5 * ab, false);
    add("branch-r2-I2C2", {r1, r2, v1, v2 + 1}, r2 * 0.5 * ab, false);
    add("branch-v1-I1C1", {r1, r2, v1 + 1, v2}, v1 * 0.5 * ab, false);
    add("branch-v1-I1C2", {r1, r2, v1, v2 + 1}, v1 * 0.5 * ab, false);
    add("branch-v1-I2C1", {r1, r2, v1, v2 + 1}, v1 * 0.5 * ab, false);
    add("branch-v2-I2C2", {r1, r2, v1, v2 + 1}, v2 * 0.5 * ab, false);
  }

  // Coalescences and real-virtual removals.
  add("coal-r1", {r1 - 1, r2, v1, v2}, binom2(r1), false);
  add("coal-r2", {r1, r2 - 1, v1, v2}, binom2(r2), false);
  add("removal-r1v1", {r1, r2, v1 - 1, v2}, static_cast<double>(r1 * v1), false);
  add("removal-r2v2", {r1, r2, v1, v2 - 1}, static_cast<double>(r2 * v2), false);
  add("coal-v1", {r1, r2, v1 - 1, v2}, binom2(v1), false);
  add("coal-v2", {r1, r2, v1, v2 - 1}, binom2(v2), false);

  return tab;
}

namespace {

void push(RateTable& tab, const std::string& label, AsgState to, double rate) {
  if (rate > 0.0) tab.entries.push_back({label, to, rate, false});
}

}  // namespace

RateTable asym_rates(const AsgState& state, const PimParams& pim, AsgRegime regime,
                     double beta) {
  pim.validate();
  check_reduced_state(state, beta);
  const double t1 = pim.theta1(), t2 = pim.theta2();
  const double ab = std::fabs(beta);
  const double r1 = static_cast<double>(state.r1);
  const double r2 = static_cast<double>(state.r2);
  const double v = static_cast<double>(beta < 0.0 ? state.v1 : state.v2);
  auto with_v = [&](long nr1, long nr2, long nv) {
    return beta < 0.0 ? AsgState{nr1, nr2, nv, 0} : AsgState{nr1, nr2, 0, nv};
  };
  const AsgState mut_to = with_v(state.r1 - 1, state.r2 + 1, state.v1 + state.v2);
  const AsgState coal_to = with_v(state.r1 - 1, state.r2, state.v1 + state.v2);
  const AsgState branch_to = with_v(state.r1, state.r2, state.v1 + state.v2 + 1);
  const AsgState vrem_to = with_v(state.r1, state.r2, state.v1 + state.v2 - 1);
  const AsgState t2rem_to = with_v(state.r1, state.r2 - 1, state.v1 + state.v2);

  RateTable tab;
  tab.state = state;

  switch (regime) {
    case AsgRegime::StrongNeg: {
      if (!(beta < 0.0)) throw std::invalid_argument("asym_rates: StrongNeg needs beta < 0");
      double denom = t1 + r1 + v - 1.0;
      push(tab, "latent-mutation-1", mut_to, r1 * 0.5 * ab * t1 / denom);
      if (state.r1 > 1) push(tab, "coalescence-1", coal_to, r1 * 0.5 * ab * (r1 - 1.0) / denom);
      push(tab, "branching", branch_to, 0.5 * (r1 + r2 + v) * (t1 + r1 + v));
      if (state.v1 > 0)
        push(tab, "virtual-removal", vrem_to, v * 0.5 * ab * (t1 + 2.0 * r1 + v - 1.0) / denom);
      if (state.r2 > 0) push(tab, "type2-removal", t2rem_to, r2 * 0.5 * t2 + binom2(state.r2));
      break;
    }
    case AsgRegime::StrongPos: {
      if (!(beta > 0.0)) throw std::invalid_argument("asym_rates: StrongPos needs beta > 0");
      double denom = t2 + r2 + v - 1.0;
      push(tab, "latent-mutation-1", mut_to, r1 / beta * 0.5 * t1 * (t2 + r2 + v));
      if (state.r1 > 1) push(tab, "coalescence-1", coal_to, binom2(state.r1));
      push(tab, "branching", branch_to, 0.5 * (r1 + r2 + v) * (t2 + r2 + v));
      if (state.v2 > 0)
        push(tab, "virtual-removal", vrem_to, v * 0.5 * beta * (t2 + 2.0 * r2 + v - 1.0) / denom);
      if (state.r2 > 0)
        push(tab, "type2-removal", t2rem_to, r2 * 0.5 * beta * (t2 + r2 - 1.0) / denom);
      break;
    }
    case AsgRegime::LargeSampleNeg: {
      if (!(beta < 0.0)) throw std::invalid_argument("asym_rates: LargeSampleNeg needs beta < 0");
      double denom = t1 + r1 + v - 1.0;
      push(tab, "latent-mutation-1", mut_to, r1 * 0.5 * r2 * t1 / denom);
      if (state.r1 > 1) push(tab, "coalescence-1", coal_to, r1 * 0.5 * r2 * (r1 - 1.0) / denom);
      push(tab, "branching", branch_to, 0.5 * ab * (t1 + r1 + v));
      if (state.v1 > 0)
        push(tab, "virtual-removal", vrem_to, v * 0.5 * r2 * (t1 + 2.0 * r1 + v - 1.0) / denom);
      if (state.r2 > 0) push(tab, "type2-removal", t2rem_to, 0.5 * r2 * r2);
      break;
    }
    case AsgRegime::LargeSamplePos: {
      if (!(beta > 0.0)) throw std::invalid_argument("asym_rates: LargeSamplePos needs beta > 0");
      double denom = t1 + r1 - 1.0;
      push(tab, "latent-mutation-1", mut_to, r1 * 0.5 * r2 * t1 / denom);
      if (state.r1 > 1) push(tab, "coalescence-1", coal_to, r1 * 0.5 * r2 * (r1 - 1.0) / denom);
      push(tab, "branching", branch_to, 0.5 * r2 * ab);
      if (state.v2 > 0) push(tab, "virtual-removal", vrem_to, v * r2);
      if (state.r2 > 0) push(tab, "type2-removal", t2rem_to, 0.5 * r2 * r2);
      break;
    }
    case AsgRegime::ScaledNeg: {
      if (!(beta < 0.0)) throw std::invalid_argument("asym_rates: ScaledNeg needs beta < 0");
      double bt = ab / r2;  // |beta~|
      double denom = t1 + r1 + v - 1.0;
      double speed = 0.5 * r2 * (1.0 + bt);
      push(tab, "latent-mutation-1", mut_to, r1 * speed * t1 / denom);
      if (state.r1 > 1) push(tab, "coalescence-1", coal_to, r1 * speed * (r1 - 1.0) / denom);
      push(tab, "branching", branch_to, 0.5 * bt * (t1 + r1 + v) / (1.0 + bt));
      if (state.v1 > 0)
        push(tab, "virtual-removal", vrem_to, v * speed * (t1 + 2.0 * r1 + v - 1.0) / denom);
      if (state.r2 > 0) push(tab, "type2-removal", t2rem_to, 0.5 * r2 * r2);
      break;
    }
    case AsgRegime::ScaledMid: {
      double bt = beta / r2;
      if (!(bt > 0.0) || !(bt < 1.0))
        throw std::invalid_argument("asym_rates: ScaledMid needs 0 < beta/r2 < 1");
      double denom = t1 + r1 - 1.0;
      double speed = 0.5 * r2 * (1.0 - bt);
      push(tab, "latent-mutation-1", mut_to, r1 * speed * t1 / denom);
      if (state.r1 > 1) push(tab, "coalescence-1", coal_to, r1 * speed * (r1 - 1.0) / denom);
      push(tab, "branching", branch_to, 0.5 * r2 * bt);
      if (state.v2 > 0) push(tab, "virtual-removal", vrem_to, v * r2);
      if (state.r2 > 0) push(tab, "type2-removal", t2rem_to, 0.5 * r2 * r2);
      break;
    }
    case AsgRegime::ScaledGt1: {
      double bt = beta / r2;
      if (!(bt > 1.0)) throw std::invalid_argument("asym_rates: ScaledGt1 needs beta/r2 > 1");
      push(tab, "latent-mutation-1", mut_to, r1 * 0.5 * t1 / (bt - 1.0));
      if (state.r1 > 1) push(tab, "coalescence-1", coal_to, binom2(state.r1) * bt / (bt - 1.0));
      push(tab, "branching", branch_to, 0.5 * r2);
      if (state.v2 > 0) push(tab, "virtual-removal", vrem_to, v * r2 * bt);
      if (state.r2 > 0) push(tab, "type2-removal", t2rem_to, 0.5 * r2 * r2 * bt);
      break;
    }
  }
  return tab;
}

RateTable collapse_full_to_reduced(const AsgState& state, const PimParams& pim,
                                   double beta) {
  check_reduced_state(state, beta);
  RateTable full = full_rates(state, pim, beta);
  auto rate_of = [&](const std::string& label) {
    for (const auto& e : full.entries)
      if (e.label == label) return e.rate;
    return 0.0;
  };
  auto with_v = [&](long nr1, long nr2, long nv) {
    return beta < 0.0 ? AsgState{nr1, nr2, nv, 0} : AsgState{nr1, nr2, 0, nv};
  };
  const long r1 = state.r1, r2 = state.r2;
  const long v = beta < 0.0 ? state.v1 : state.v2;

  RateTable tab;
  tab.state = state;
  tab.total_unconditional = full.total_unconditional;
  auto push_nonzero = [&](const std::string& label, AsgState to, double rate) {
    if (rate > 0.0) tab.entries.push_back({label, to, rate, false});
  };

  push_nonzero("latent-mutation-1", with_v(r1 - 1, r2 + 1, v), rate_of("mut-r1-latent"));
  push_nonzero("coalescence-1", with_v(r1 - 1, r2, v), rate_of("coal-r1"));
  if (beta < 0.0) {
    push_nonzero("branching", with_v(r1, r2, v + 1),
                 rate_of("branch-r1-I1C1") + rate_of("branch-r2-I1C2") +
                     rate_of("branch-v1-I1C1") + rate_of("branch-v2-I1C2"));
    push_nonzero("virtual-removal", with_v(r1, r2, v - 1),
                 rate_of("mut-v1-empty") + rate_of("mut-v1-actual") +
                     rate_of("removal-r1v1") + rate_of("coal-v1"));
    // The favored-incoming branchings pair up into state-preserving nulls.
    tab.null_rate = rate_of("mut-r1-empty") + rate_of("branch-r2-I2C1") +
                    rate_of("branch-r2-I2C2") + rate_of("branch-v2-I2C1") +
                    rate_of("branch-v2-I2C2");
  } else {
    push_nonzero("branching", with_v(r1, r2, v + 1),
                 rate_of("branch-r1-I2C1") + rate_of("branch-r2-I2C2") +
                     rate_of("branch-v1-I2C1") + rate_of("branch-v2-I2C2"));
    push_nonzero("virtual-removal", with_v(r1, r2, v - 1),
                 rate_of("mut-v2-empty") + rate_of("mut-v2-actual") +
                     rate_of("removal-r2v2") + rate_of("coal-v2"));
    tab.null_rate = rate_of("mut-r1-empty") + rate_of("branch-r1-I1C1") +
                    rate_of("branch-r1-I1C2") + rate_of("branch-v1-I1C1") +
                    rate_of("branch-v1-I1C2");
  }
  push_nonzero("type2-removal", with_v(r1, r2 - 1, v),
               rate_of("mut-r2-empty") + rate_of("mut-r2-actual") + rate_of("coal-r2"));
  return tab;
}

double collapse_worst_rel_err(const AsgState& state, const PimParams& pim, double beta) {
  RateTable reduced = reduced_rates(state, pim, beta);
  RateTable collapsed = collapse_full_to_reduced(state, pim, beta);
  double worst = 0.0;
  auto cmp = [&](double a, double b) {
    double scale = std::max({std::fabs(a), std::fabs(b), 1e-300});
    worst = std::max(worst, std::fabs(a - b) / scale);
  };
  for (const auto& e : reduced.entries) cmp(e.rate, collapsed.find(e.label).rate);
  if (collapsed.entries.size() != reduced.entries.size()) worst = 1.0;
  cmp(reduced.null_rate, collapsed.null_rate);
  return worst;
}

AsgRunResult simulate_asg(const SampleCounts& counts, const PimParams& pim, double beta,
                          Philox& rng, AsgMode mode, long max_jumps) {
  counts.validate();
  pim.validate();
  if (counts.n() < 1) throw std::domain_error("simulate_asg: need n1 + n2 >= 1");
  if (beta == 0.0) throw std::invalid_argument("simulate_asg: beta must be nonzero");

  AsgState s{counts.n1, counts.n2, 0, 0};
  AsgRunResult res;
  double t = 0.0;
  double v_time_integral = 0.0;
  // Rate tables repeat along the trajectory; cache by state.
  std::map<std::tuple<long, long, long, long>, RateTable> cache;

  while (s.r1 + s.r2 > 1) {
    auto key = std::make_tuple(s.r1, s.r2, s.v1, s.v2);
    auto it = cache.find(key);
    if (it == cache.end()) {
      RateTable tab = mode == AsgMode::Reduced ? reduced_rates(s, pim, beta)
                                               : full_rates(s, pim, beta);
      it = cache.emplace(key, std::move(tab)).first;
    }
    const RateTable& tab = it->second;
    double total = tab.total_active();
    if (!(total > 0.0)) throw std::runtime_error("simulate_asg: degenerate rate table");
    double gap = rng.exponential(total);
    v_time_integral += gap * static_cast<double>(s.v1 + s.v2);
    t += gap;
    double u = rng.uniform() * total;
    const RateEntry* chosen = nullptr;
    double acc = 0.0;
    for (const auto& e : tab.entries) {
      if (e.null_event) continue;
      acc += e.rate;
      chosen = &e;
      if (u < acc) break;
    }
    if (!chosen) throw std::runtime_error("simulate_asg: no active transition");
    if (chosen->target.r1 == s.r1 - 1 && chosen->target.r2 == s.r2 + 1)
      res.latent_mut1_events += 1;
    s = chosen->target;
    if (++res.jumps > max_jumps)
      throw std::runtime_error("simulate_asg: jump cap exceeded");
  }
  res.stop_time = t;
  res.mean_virtual = t > 0.0 ? v_time_integral / t : 0.0;
  res.survivor_is_type1 = s.r1 == 1;
  res.k1 = res.latent_mut1_events + (res.survivor_is_type1 ? 1 : 0);
  return res;
}

}  // namespace latmut
