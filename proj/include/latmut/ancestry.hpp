#pragma once

#include <string>
#include <vector>

#include "latmut/diffusion.hpp"
#include "latmut/rng.hpp"
#include "latmut/stationary.hpp"

namespace latmut {

enum class EventKind { Coal1, Mut1, Coal2, Mut2 };

const char* event_kind_name(EventKind k);

// Surviving observed lineages and latent-mutation tallies per type.
struct AncestralState {
  int a1 = 0;
  int l1 = 0;
  int a2 = 0;
  int l2 = 0;
};

struct AncestryEvent {
  double time = 0.0;
  EventKind kind = EventKind::Coal1;
  double freq = 0.0;  // population frequency at the event
  AncestralState after;
};

struct AncestryEventLog {
  std::vector<AncestryEvent> events;
  bool complete = false;
  std::string error;  // set when the log is partial

  int count(EventKind k) const;
  // Time of the i-th type-1 jump (1-based); the age of the oldest type-1
  // latent mutation is jump_time_type1(n1).
  double jump_time_type1(int i) const;
  void check_invariants(const SampleCounts& counts, bool both_types) const;
};

// K1, K2 from a completed log.
std::pair<int, int> latent_counts(const AncestryEventLog& log);

enum class TrackMode { Type1Only, Both };

struct AncestrySimOptions {
  double event_cap = 0.1;          // max expected events per frozen interval
  double quiescent_rate_eps = 0.02;  // total-rate threshold for fast-forward
  double hazard_window_cap = 0.02;   // expected hazard per fast-forward window
  int window_subdraws = 8;
  double relax_time_floor = 0.2;   // fast-forward only after the start law has mixed
  double relax_time_scale = 40.0;  // ... at time >= max(floor, scale/(1+|beta|))
  double horizon_cap = 5e7;
  long max_steps = 400000000;
  bool allow_fast_forward = true;
};

// Simulates the conditional ancestral process along a backward frequency path:
// type-1 events fire at rate a1((1-p)theta1 + a1 - 1)/(2p), split between
// coalescence and latent mutation; type-2 symmetrically with p <-> 1-p.
AncestryEventLog simulate_conditional_ancestry(const SampleCounts& counts,
                                               const ModelParams& params,
                                               FrequencyPathSource& path, Philox& rng,
                                               TrackMode track,
                                               const AncestrySimOptions& opts = {});

// Number-of-alleles law: K = sum of Bernoulli(theta/(theta+j-1)), j = 1..n.
struct EwensAllelesPmf {
  int n = 0;
  double theta = 0.0;
  std::vector<double> pmf;  // pmf[k-1] = P(K = k), k = 1..n

  double mean() const;
  void validate() const;
};

EwensAllelesPmf ewens_alleles_pmf(int n, double theta);

// K1 given the frequencies at the first n1-1 type-1 jump times:
// 1 + sum over k=2..n1 of Bernoulli((1-p)theta1/((1-p)theta1+k-1)) with the
// k-th variable read at jump n1-k+1. Exact pmf by convolution, or a sample.
std::vector<double> bernoulli_k1_pmf(const std::vector<double>& jump_freqs, int n1,
                                     double theta1);
int bernoulli_k1_sample(const std::vector<double>& jump_freqs, int n1, double theta1,
                        Philox& rng);

// Genealogy of the rare type in the rescaled limit: the ZGen square-root
// process drives events at rate a1(theta1+a1-1)/(2z) with frequency-free
// mutation split theta1/(theta1+a1-1). Times are in rescaled units.
struct RescaledGenealogyOptions {
  double dt = 5e-3;  // the driving process relaxes on O(1); exact transitions
  double event_cap = 0.05;
  double horizon_cap = 1e7;
};

AncestryEventLog rescaled_genealogy_sim(int n1, double theta1, ScaledSelection scaled,
                                        Philox& rng,
                                        const RescaledGenealogyOptions& opts = {});

}  // namespace latmut
