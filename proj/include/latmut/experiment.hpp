#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "latmut/rng.hpp"
#include "latmut/table.hpp"

namespace latmut {

// A single experiment run: scenario name plus the knobs it reads. Parsed from
// a JSON document; command-line flags override individual fields.
struct ExperimentConfig {
  std::string scenario;  // i | ii | iii_a | iii_b | time_varying | asg_crosscheck |
                         // moran | asymptotics_audit
  double theta1 = 0.5;
  double theta2 = 0.5;
  double beta = 0.0;
  double beta_tilde = 0.0;
  bool use_beta_tilde = false;  // beta = beta_tilde * n2
  double theta = 1.0;           // parent-independent form (asg scenarios)
  double pi1 = 0.5;
  long n1 = 2;
  long n2 = 2;
  long replicates = 10000;
  long replicate_offset = 0;
  double dt = 1e-3;
  std::uint64_t seed = 20240901;
  int threads = 0;  // 0 = hardware concurrency
  std::string out;
  std::string format = "csv";  // csv | json
  bool check = false;
  // Time-varying scenario.
  double demog_T = 2.0;
  double demog_rho0 = 1.0;
  double demog_rho1 = 3.0;
  // Moran scenario.
  double moran_s = 0.5;
  double moran_alpha = 0.2;
  // Optional event-log dump.
  std::string dump_events;
  long dump_limit = 50;

  double effective_beta() const;
  static ExperimentConfig defaults_for(const std::string& scenario);
  static ExperimentConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
  void validate() const;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct RunOutput {
  ResultTable table;
  std::vector<CheckResult> checks;

  bool all_pass() const;
};

RunOutput run_experiment(const ExperimentConfig& config);

// Replicate harness: fn(replicate_index, rng) with rng keyed by
// (seed, replicate_offset + index); scheduling cannot change results.
void run_replicates(long replicates, long offset, std::uint64_t seed, int threads,
                    const std::function<void(long, Philox&)>& fn);

}  // namespace latmut
