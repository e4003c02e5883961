#pragma once

#include <string>
#include <vector>

#include "latmut/rng.hpp"
#include "latmut/stationary.hpp"

namespace latmut {

// Parent-independent mutation: theta1 = theta*pi1, theta2 = theta*pi2.
struct PimParams {
  double theta = 0.0;
  double pi1 = 0.0;
  double pi2 = 0.0;

  double theta1() const { return theta * pi1; }
  double theta2() const { return theta * pi2; }
  ModelParams to_model(double beta) const { return {theta1(), theta2(), beta}; }
  void validate() const;
};

// Real and virtual lineage counts. The reduced process carries exactly one
// virtual class (type 1 when beta < 0, type 2 when beta > 0); the full process
// keeps both slots.
struct AsgState {
  long r1 = 0, r2 = 0, v1 = 0, v2 = 0;
};

struct RateEntry {
  std::string label;
  AsgState target;
  double rate = 0.0;
  bool null_event = false;  // leaves the state unchanged
};

struct RateTable {
  AsgState state;
  std::vector<RateEntry> entries;
  double null_rate = 0.0;          // aggregate rate of null events
  double total_unconditional = 0.0;  // (R)(theta+|beta|+R-1)/2 with R the lineage count

  double total_active() const;  // sum of non-null entry rates
  const RateEntry& find(const std::string& label) const;
};

// log of the ordered-configuration probability: the integral of
// x^(r1+v1) (1-x)^(r2+v2) against the stationary density.
double log_qo(long r1, long r2, long v1, long v2, const PimParams& pim, double beta);

// The five-transition conditional process; the null rate (empty mutations and
// collapsed branchings) is reported separately.
RateTable reduced_rates(const AsgState& state, const PimParams& pim, double beta);

// All twenty-two weighted transitions of the conditional process before the
// collapse simplifications, including the empty-mutation self-loops.
RateTable full_rates(const AsgState& state, const PimParams& pim, double beta);

enum class AsgRegime {
  StrongNeg,       // |beta| large, beta < 0, sample size fixed
  StrongPos,       // beta large and positive
  LargeSampleNeg,  // r2 large, beta < 0 fixed
  LargeSamplePos,  // r2 large, beta > 0 fixed
  ScaledNeg,       // beta = bt*r2, bt < 0
  ScaledMid,       // beta = bt*r2, 0 < bt < 1
  ScaledGt1,       // beta = bt*r2, bt > 1
};

// Leading-order rate table for the regime. The large parameter is |beta| for
// the strong-selection regimes and the state's r2 otherwise; the scaled
// regimes read beta_tilde = beta / r2.
RateTable asym_rates(const AsgState& state, const PimParams& pim, AsgRegime regime,
                     double beta);

// Independent route to the reduced table: apply the branching collapse and the
// discard-on-mutation merge to the full table and regroup by outcome.
RateTable collapse_full_to_reduced(const AsgState& state, const PimParams& pim, double beta);

// Worst per-entry relative disagreement between reduced_rates and the
// collapsed full table (null rate included).
double collapse_worst_rel_err(const AsgState& state, const PimParams& pim, double beta);

enum class AsgMode { Reduced, Full };

struct AsgRunResult {
  int k1 = 0;               // latent type-1 mutations, terminal convention included
  int latent_mut1_events = 0;
  bool survivor_is_type1 = false;
  double stop_time = 0.0;
  double mean_virtual = 0.0;  // time-average of the virtual count
  long jumps = 0;
};

// Continuous-time jump simulation from state (n1, n2, 0) until r1 + r2 = 1.
// K1 counts (r1-1, r2+1) events plus one if the surviving real lineage is of
// type 1 (its eventual mutation is not simulated by the stopped process).
AsgRunResult simulate_asg(const SampleCounts& counts, const PimParams& pim, double beta,
                          Philox& rng, AsgMode mode = AsgMode::Reduced,
                          long max_jumps = 100000000);

}  // namespace latmut
