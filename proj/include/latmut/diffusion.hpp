#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "latmut/rng.hpp"
#include "latmut/stationary.hpp"
#include "latmut/stats.hpp"

namespace latmut {

// Discretized trajectory on a regular grid: values[k] is the state at
// t0 + k*dt. Simulators refine internally near the boundaries; the grid is
// what gets recorded.
struct FrequencyPath {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<double> values;

  void validate() const;
};

// Tabulated strictly positive population-size profile on [0,T], linearly
// interpolated between knots.
struct Demography {
  std::vector<double> knot_t;
  std::vector<double> knot_rho;

  static Demography constant(double T, double rho = 1.0);
  static Demography ramp(double T, double rho0, double rho1);
  double T() const { return knot_t.back(); }
  double rho(double t) const;
  void validate() const;
};

struct WfOptions {
  double dt = 1e-3;
  // Sub-steps halve while min(x, 1-x) < 10*h, down to this floor.
  double boundary_floor = 1e-8;
};

// Single-trajectory Euler-Maruyama stepper for the Wright-Fisher SDE, with
// per-step clamping to [0,1] and boundary-adaptive halving of the step.
class WfStepper {
 public:
  WfStepper(const ModelParams& params, double x0, const WfOptions& opts, Philox& rng,
            const Demography* demog = nullptr);

  // Advance by at most max_dt (one internal sub-step); returns the step taken.
  // The frequency is frozen at its pre-step value over the returned interval.
  double step(double max_dt);
  // Re-run the last step at half its size with fresh noise. Used to back out of
  // an exact boundary hit. Returns false if no step can be undone.
  bool refine_last();

  double x() const { return x_; }
  double t() const { return t_; }

 private:
  double drift(double x) const;
  ModelParams params_;
  const Demography* demog_;
  WfOptions opts_;
  Philox* rng_;
  double x_ = 0.0, t_ = 0.0;
  double prev_x_ = 0.0, prev_t_ = 0.0, prev_h_ = 0.0;
  bool has_prev_ = false;
};

FrequencyPath simulate_wf(const ModelParams& params, double x0, double dt, double horizon,
                          Philox& rng, const WfOptions& opts = {});
FrequencyPath simulate_wf_varying(const ModelParams& params, const Demography& demog,
                                  double x0, double dt, Philox& rng,
                                  const WfOptions& opts = {});

enum class CirKind { QZero, ZGen, QTilde };
enum class CirScheme { FullTruncationEuler, ExactTransition };

// dZ = sqrt(Z) dW + (1/2)(drift) dt with drift per kind:
//   QZero : theta2 - Z,  ZGen : theta1 + bt Z,  QTilde : theta2 - bt Z.
class CirStepper {
 public:
  CirStepper(CirKind kind, const ModelParams& params, ScaledSelection scaled, double z0,
             CirScheme scheme, Philox& rng);
  double step(double max_dt);  // advances by exactly max_dt; returns it
  double z() const { return std::max(z_, 0.0); }
  double t() const { return t_; }

 private:
  double alpha_ = 0.0;  // dZ = (alpha + gamma Z) dt + sqrt(Z) dW
  double gamma_ = 0.0;
  CirScheme scheme_;
  Philox* rng_;
  double z_ = 0.0, t_ = 0.0;
};

std::vector<double> simulate_cir(CirKind kind, const ModelParams& params,
                                 ScaledSelection scaled, double z0, double dt,
                                 double horizon, Philox& rng,
                                 CirScheme scheme = CirScheme::FullTruncationEuler);

// Exact space-time rescalings of the Wright-Fisher SDE:
//   Type1 : Y = n p(t/n)      (rare-allele side)
//   Type2 : Y = beta q(t/beta) with q = 1 - p (strong-selection side)
enum class RescaledSide { Type1, Type2 };

class RescaledWfStepper {
 public:
  RescaledWfStepper(RescaledSide side, const ModelParams& params, long n, double y0,
                    Philox& rng);
  double step(double dt);
  double y() const { return y_; }

 private:
  double scale_ = 0.0;  // n or beta
  double a_ = 0.0, b_ = 0.0, s_ = 0.0;
  Philox* rng_;
  double y_ = 0.0;
};

// Matched transient statistics of a rescaled Wright-Fisher ensemble and the
// corresponding CIR limit, for convergence testing.
struct RescaledCheckpointStats {
  double time = 0.0;
  Summary wf;
  Summary cir;
};

std::vector<RescaledCheckpointStats> rescaled_frequency_check(
    const ModelParams& params, const SampleCounts& counts, RescaledSide side,
    const std::vector<double>& checkpoints, long replicates, double dt,
    std::uint64_t seed);

// Backward path started from a posterior draw; by reversibility at
// stationarity the backward dynamics are the forward dynamics.
struct ReversedStationaryConfig {
  WfOptions wf;
};

// Forward path on [0,T] under the demography, Bayes-accepted against the
// sample counts, returned reversed in time together with every internal
// sub-step so the ancestry replay sees the full resolution.
struct ConditionedPath {
  std::vector<double> backward_t;  // increasing from 0 (= forward time T)
  std::vector<double> freq;        // frequency at backward_t
  long attempts = 0;               // forward simulations consumed
  FrequencyPath grid() const;      // regular-grid view (coarsened)
};

ConditionedPath conditioned_varying_path(const SampleCounts& counts,
                                         const ModelParams& params,
                                         const Demography& demog,
                                         const std::function<double(Philox&)>& mu0,
                                         double dt, Philox& rng, long max_attempts = 1000000,
                                         const WfOptions& opts = {});

// Backward-time frequency feed for the ancestral process. Frequencies are
// frozen over the returned sub-intervals; sources may be extendable without
// bound (stationary reversal) or finite (replayed conditioned paths).
class FrequencyPathSource {
 public:
  struct Step {
    double h = 0.0;     // interval length actually taken
    double freq = 0.0;  // frequency frozen on the interval
  };

  virtual ~FrequencyPathSource() = default;
  virtual Step advance(double max_dt) = 0;
  virtual double current_freq() const = 0;
  virtual double current_time() const = 0;
  // Redo the last step at half its size (exact-boundary-hit escape).
  virtual bool refine_last() { return false; }
  virtual bool exhausted() const { return false; }
  // True when the marginal law at any sufficiently late time is the stationary
  // law, enabling long-range fast-forward in the event engine.
  virtual bool stationary_refresh_available() const { return false; }
  virtual double stationary_draw(Philox&) {
    throw std::logic_error("path source has no stationary marginal");
  }
};

// Backward path at stationarity: p0 from the posterior given the counts, then
// forward Wright-Fisher dynamics (equal in law to the reversed path).
class ReversedStationaryPathSource : public FrequencyPathSource {
 public:
  ReversedStationaryPathSource(const SampleCounts& counts, const ModelParams& params,
                               const WfOptions& opts, Philox& rng);
  Step advance(double max_dt) override;
  double current_freq() const override { return stepper_.x(); }
  double current_time() const override { return stepper_.t(); }
  bool refine_last() override { return stepper_.refine_last(); }
  bool stationary_refresh_available() const override { return true; }
  double stationary_draw(Philox& rng) override;

 private:
  ModelParams params_;
  WfStepper stepper_;
};

// Replays a recorded backward path; sub-interval splitting is exact because
// the frequency is piecewise frozen. Exhausts at the recorded horizon.
class ReplayPathSource : public FrequencyPathSource {
 public:
  explicit ReplayPathSource(const ConditionedPath& path);
  Step advance(double max_dt) override;
  double current_freq() const override;
  double current_time() const override { return t_; }
  bool exhausted() const override;

 private:
  const ConditionedPath* path_;
  double t_ = 0.0;
  std::size_t idx_ = 0;
};

// Frozen frequency; optionally presents itself as stationary for testing the
// fast-forward machinery against closed forms.
class ConstantPathSource : public FrequencyPathSource {
 public:
  ConstantPathSource(double freq, double dt, bool stationary = false)
      : freq_(freq), dt_(dt), stationary_(stationary) {}
  Step advance(double max_dt) override {
    double h = std::min(dt_, max_dt);
    t_ += h;
    return {h, freq_};
  }
  double current_freq() const override { return freq_; }
  double current_time() const override { return t_; }
  bool stationary_refresh_available() const override { return stationary_; }
  double stationary_draw(Philox&) override { return freq_; }

 private:
  double freq_, dt_, t_ = 0.0;
  bool stationary_;
};

FrequencyPath reversed_stationary_path(const SampleCounts& counts,
                                       const ModelParams& params, double dt,
                                       double horizon, Philox& rng,
                                       const WfOptions& opts = {});

}  // namespace latmut
