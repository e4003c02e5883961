#include "latmut/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace latmut {

void FrequencyPath::validate() const {
  if (values.empty()) throw std::logic_error("FrequencyPath: empty");
  if (!(dt > 0.0)) throw std::logic_error("FrequencyPath: dt must be positive");
  for (double v : values)
    if (v < 0.0 || v > 1.0) throw std::logic_error("FrequencyPath: value outside [0,1]");
}

Demography Demography::constant(double T, double rho) {
  Demography d;
  d.knot_t = {0.0, T};
  d.knot_rho = {rho, rho};
  d.validate();
  return d;
}

Demography Demography::ramp(double T, double rho0, double rho1) {
  Demography d;
  d.knot_t = {0.0, T};
  d.knot_rho = {rho0, rho1};
  d.validate();
  return d;
}

void Demography::validate() const {
  if (knot_t.size() < 2 || knot_t.size() != knot_rho.size())
    throw std::invalid_argument("Demography: need at least two knots");
  if (knot_t.front() != 0.0 || !(knot_t.back() > 0.0))
    throw std::invalid_argument("Demography: knots must start at 0 and end at T > 0");
  for (std::size_t i = 1; i < knot_t.size(); ++i)
    if (!(knot_t[i] > knot_t[i - 1]))
      throw std::invalid_argument("Demography: knot times must increase");
  for (double r : knot_rho)
    if (!(r > 0.0)) throw std::invalid_argument("Demography: rho must be strictly positive");
}

double Demography::rho(double t) const {
  if (t <= knot_t.front()) return knot_rho.front();
  if (t >= knot_t.back()) return knot_rho.back();
  auto it = std::upper_bound(knot_t.begin(), knot_t.end(), t);
  std::size_t i = static_cast<std::size_t>(it - knot_t.begin());
  double w = (t - knot_t[i - 1]) / (knot_t[i] - knot_t[i - 1]);
  return knot_rho[i - 1] + w * (knot_rho[i] - knot_rho[i - 1]);
}

WfStepper::WfStepper(const ModelParams& params, double x0, const WfOptions& opts,
                     Philox& rng, const Demography* demog)
    : params_(params), demog_(demog), opts_(opts), rng_(&rng), x_(x0) {
  // Unlike the stationary formulas, the SDE itself is fine with zero mutation
  // rates (absorbing boundaries).
  if (params.theta1 < 0.0 || params.theta2 < 0.0 || !std::isfinite(params.beta))
    throw std::domain_error("WfStepper: need theta1, theta2 >= 0 and finite beta");
  if (x0 < 0.0 || x0 > 1.0) throw std::invalid_argument("WfStepper: x0 outside [0,1]");
  if (!(opts.dt > 0.0)) throw std::invalid_argument("WfStepper: dt must be positive");
}

double WfStepper::drift(double x) const {
  return 0.5 * (params_.theta1 * (1.0 - x) - params_.theta2 * x +
                params_.beta * x * (1.0 - x));
}

double WfStepper::step(double max_dt) {
  double h = std::min(opts_.dt, max_dt);
  double edge = std::min(x_, 1.0 - x_);
  while (h > opts_.boundary_floor && edge < 10.0 * h) h *= 0.5;
  prev_x_ = x_;
  prev_t_ = t_;
  prev_h_ = h;
  has_prev_ = true;
  double rho = demog_ ? demog_->rho(t_) : 1.0;
  double diff = x_ * (1.0 - x_) / rho;
  x_ += drift(x_) * h + std::sqrt(diff * h) * rng_->normal();
  x_ = std::min(1.0, std::max(0.0, x_));
  t_ = prev_t_ + h;
  return h;
}

bool WfStepper::refine_last() {
  if (!has_prev_ || prev_h_ <= 0.0) return false;
  x_ = prev_x_;
  t_ = prev_t_;
  double h = 0.5 * prev_h_;
  prev_h_ = h;
  double rho = demog_ ? demog_->rho(t_) : 1.0;
  double diff = x_ * (1.0 - x_) / rho;
  x_ += drift(x_) * h + std::sqrt(diff * h) * rng_->normal();
  x_ = std::min(1.0, std::max(0.0, x_));
  t_ = prev_t_ + h;
  return true;
}

namespace {

FrequencyPath record_on_grid(WfStepper& stepper, double dt, double horizon) {
  FrequencyPath path;
  path.t0 = 0.0;
  path.dt = dt;
  path.values.push_back(stepper.x());
  long steps = static_cast<long>(std::ceil(horizon / dt - 1e-9));
  for (long k = 1; k <= steps; ++k) {
    double target = static_cast<double>(k) * dt;
    while (stepper.t() < target - 1e-12) stepper.step(target - stepper.t());
    path.values.push_back(stepper.x());
  }
  return path;
}

}  // namespace

FrequencyPath simulate_wf(const ModelParams& params, double x0, double dt, double horizon,
                          Philox& rng, const WfOptions& opts) {
  if (!(dt > 0.0)) throw std::invalid_argument("simulate_wf: dt must be positive");
  if (!(horizon > 0.0)) throw std::invalid_argument("simulate_wf: horizon must be positive");
  WfOptions o = opts;
  o.dt = dt;
  WfStepper stepper(params, x0, o, rng);
  return record_on_grid(stepper, dt, horizon);
}

FrequencyPath simulate_wf_varying(const ModelParams& params, const Demography& demog,
                                  double x0, double dt, Philox& rng,
                                  const WfOptions& opts) {
  demog.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("simulate_wf_varying: dt must be positive");
  WfOptions o = opts;
  o.dt = dt;
  WfStepper stepper(params, x0, o, rng, &demog);
  return record_on_grid(stepper, dt, demog.T());
}

CirStepper::CirStepper(CirKind kind, const ModelParams& params, ScaledSelection scaled,
                       double z0, CirScheme scheme, Philox& rng)
    : scheme_(scheme), rng_(&rng), z_(z0) {
  params.validate();
  if (z0 < 0.0) throw std::invalid_argument("CirStepper: z0 must be nonnegative");
  double bt = scaled.beta_tilde;
  switch (kind) {
    case CirKind::QZero:
      alpha_ = 0.5 * params.theta2;
      gamma_ = -0.5;
      break;
    case CirKind::ZGen:
      if (!(bt < 1.0))
        throw std::invalid_argument("CirStepper: ZGen requires beta_tilde < 1");
      alpha_ = 0.5 * params.theta1;
      gamma_ = 0.5 * bt;
      break;
    case CirKind::QTilde:
      if (!(bt > 0.0))
        throw std::invalid_argument("CirStepper: QTilde requires beta_tilde > 0");
      alpha_ = 0.5 * params.theta2;
      gamma_ = -0.5 * bt;
      break;
  }
}

double CirStepper::step(double h) {
  if (!(h > 0.0)) throw std::invalid_argument("CirStepper: step must be positive");
  if (scheme_ == CirScheme::FullTruncationEuler) {
    double zp = std::max(z_, 0.0);
    z_ += (alpha_ + gamma_ * zp) * h + std::sqrt(zp * h) * rng_->normal();
  } else {
    // Exact noncentral chi-square transition, valid for either sign of gamma.
    // The small-kappa*h branch avoids underflow of 1 - e^(-kappa h).
    double kappa = -gamma_;
    double w, lam;
    if (std::fabs(kappa * h) < 1e-8) {
      w = 0.25 * h;
      lam = 4.0 * std::max(z_, 0.0) / h;
    } else {
      double em = -std::expm1(-kappa * h);  // 1 - e^(-kappa h), sign of kappa
      w = em / (4.0 * kappa);
      lam = 4.0 * kappa * (1.0 - em) * std::max(z_, 0.0) / em;
    }
    double nu = 4.0 * alpha_;
    long j = rng_->poisson(0.5 * lam);
    double g = rng_->gamma(0.5 * nu + static_cast<double>(j), 0.5);
    z_ = w * g;
  }
  t_ += h;
  return h;
}

std::vector<double> simulate_cir(CirKind kind, const ModelParams& params,
                                 ScaledSelection scaled, double z0, double dt,
                                 double horizon, Philox& rng, CirScheme scheme) {
  if (!(dt > 0.0) || !(horizon > 0.0))
    throw std::invalid_argument("simulate_cir: dt and horizon must be positive");
  CirStepper stepper(kind, params, scaled, z0, scheme, rng);
  long steps = static_cast<long>(std::ceil(horizon / dt - 1e-9));
  std::vector<double> path;
  path.reserve(static_cast<std::size_t>(steps) + 1);
  path.push_back(stepper.z());
  for (long k = 0; k < steps; ++k) {
    stepper.step(dt);
    path.push_back(stepper.z());
  }
  return path;
}

RescaledWfStepper::RescaledWfStepper(RescaledSide side, const ModelParams& params, long n,
                                     double y0, Philox& rng)
    : rng_(&rng), y_(y0) {
  params.validate();
  if (side == RescaledSide::Type1) {
    if (n < 1) throw std::invalid_argument("RescaledWfStepper: need n >= 1");
    scale_ = static_cast<double>(n);
    a_ = params.theta1;
    b_ = params.theta2;
    s_ = params.beta / scale_;
  } else {
    if (!(params.beta > 0.0))
      throw std::invalid_argument("RescaledWfStepper: Type2 rescaling needs beta > 0");
    scale_ = params.beta;
    a_ = params.theta2;
    b_ = params.theta1;
    s_ = -1.0;
  }
  if (y0 < 0.0 || y0 > scale_) throw std::invalid_argument("RescaledWfStepper: y0 outside [0,scale]");
}

double RescaledWfStepper::step(double h) {
  double frac = y_ / scale_;
  double drift = 0.5 * (a_ * (1.0 - frac) - b_ * frac + s_ * y_ * (1.0 - frac));
  double diff = y_ * (1.0 - frac);
  y_ += drift * h + std::sqrt(std::max(diff, 0.0) * h) * rng_->normal();
  y_ = std::min(scale_, std::max(0.0, y_));
  return h;
}

std::vector<RescaledCheckpointStats> rescaled_frequency_check(
    const ModelParams& params, const SampleCounts& counts, RescaledSide side,
    const std::vector<double>& checkpoints, long replicates, double dt,
    std::uint64_t seed) {
  if (checkpoints.empty()) throw std::invalid_argument("rescaled_frequency_check: no checkpoints");
  std::vector<std::vector<double>> wf_vals(checkpoints.size());
  std::vector<std::vector<double>> cir_vals(checkpoints.size());

  double bt = side == RescaledSide::Type1
                  ? params.beta / static_cast<double>(counts.n2)
                  : 0.0;
  for (long r = 0; r < replicates; ++r) {
    Philox rng(seed, static_cast<std::uint64_t>(r));
    // Matched initial laws: the posterior gamma limit on the Type1 side, the
    // origin on the Type2 side.
    double y0, z0;
    if (side == RescaledSide::Type1) {
      y0 = static_cast<double>(counts.n()) * posterior_sample(counts, params, rng);
      z0 = rng.gamma(params.theta1 + static_cast<double>(counts.n1), 1.0 - bt);
    } else {
      y0 = 0.0;
      z0 = 0.0;
    }
    RescaledWfStepper wf(side, params, counts.n(), y0, rng);
    CirKind kind = side == RescaledSide::Type1 ? CirKind::ZGen : CirKind::QZero;
    CirStepper cir(kind, params, {bt}, z0, CirScheme::ExactTransition, rng);
    double t = 0.0;
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      while (t < checkpoints[c] - 1e-12) {
        double h = std::min(dt, checkpoints[c] - t);
        wf.step(h);
        cir.step(h);
        t += h;
      }
      wf_vals[c].push_back(wf.y());
      cir_vals[c].push_back(cir.z());
    }
  }
  std::vector<RescaledCheckpointStats> out;
  for (std::size_t c = 0; c < checkpoints.size(); ++c)
    out.push_back({checkpoints[c], summarize(wf_vals[c]), summarize(cir_vals[c])});
  return out;
}

FrequencyPath ConditionedPath::grid() const {
  FrequencyPath p;
  if (backward_t.size() < 2) throw std::logic_error("ConditionedPath: too short");
  p.t0 = 0.0;
  p.dt = backward_t.back() / 256.0;
  std::size_t j = 0;
  for (int k = 0; k <= 256; ++k) {
    double t = p.dt * k;
    while (j + 1 < backward_t.size() && backward_t[j + 1] <= t) ++j;
    p.values.push_back(freq[j]);
  }
  return p;
}

ConditionedPath conditioned_varying_path(const SampleCounts& counts,
                                         const ModelParams& params,
                                         const Demography& demog,
                                         const std::function<double(Philox&)>& mu0,
                                         double dt, Philox& rng, long max_attempts,
                                         const WfOptions& opts) {
  counts.validate();
  params.validate();
  demog.validate();
  const double n1 = static_cast<double>(counts.n1);
  const double n2 = static_cast<double>(counts.n2);
  const double n = n1 + n2;
  // log max over y of y^n1 (1-y)^n2.
  double ystar = n1 / n;
  double log_max = 0.0;
  if (counts.n1 > 0) log_max += n1 * std::log(ystar);
  if (counts.n2 > 0) log_max += n2 * std::log1p(-ystar);

  std::vector<double> ts, xs;
  for (long attempt = 1; attempt <= max_attempts; ++attempt) {
    ts.clear();
    xs.clear();
    double x0 = mu0(rng);
    WfOptions o = opts;
    o.dt = dt;
    WfStepper stepper(params, x0, o, rng, &demog);
    ts.push_back(0.0);
    xs.push_back(x0);
    const double T = demog.T();
    while (stepper.t() < T - 1e-12) {
      stepper.step(T - stepper.t());
      ts.push_back(stepper.t());
      xs.push_back(stepper.x());
    }
    double xT = xs.back();
    double log_w = -std::numeric_limits<double>::infinity();
    if ((counts.n1 == 0 || xT > 0.0) && (counts.n2 == 0 || xT < 1.0)) {
      log_w = 0.0;
      if (counts.n1 > 0) log_w += n1 * std::log(xT);
      if (counts.n2 > 0) log_w += n2 * std::log1p(-xT);
      log_w -= log_max;
    }
    if (std::log(rng.uniform()) < log_w) {
      ConditionedPath path;
      path.attempts = attempt;
      std::size_t m = ts.size();
      path.backward_t.reserve(m);
      path.freq.reserve(m);
      for (std::size_t i = 0; i < m; ++i) {
        path.backward_t.push_back(T - ts[m - 1 - i]);
        path.freq.push_back(xs[m - 1 - i]);
      }
      return path;
    }
  }
  throw std::runtime_error(
      "conditioned_varying_path: no acceptance within the attempt cap; "
      "the sample counts are too unlikely under mu0");
}

ReversedStationaryPathSource::ReversedStationaryPathSource(const SampleCounts& counts,
                                                           const ModelParams& params,
                                                           const WfOptions& opts,
                                                           Philox& rng)
    : params_(params), stepper_(params, posterior_sample(counts, params, rng), opts, rng) {}

FrequencyPathSource::Step ReversedStationaryPathSource::advance(double max_dt) {
  double frozen = stepper_.x();
  double h = stepper_.step(max_dt);
  return {h, frozen};
}

double ReversedStationaryPathSource::stationary_draw(Philox& rng) {
  return posterior_sample({0, 0}, params_, rng);
}

ReplayPathSource::ReplayPathSource(const ConditionedPath& path) : path_(&path) {
  if (path.backward_t.size() < 2)
    throw std::invalid_argument("ReplayPathSource: path too short");
}

double ReplayPathSource::current_freq() const {
  std::size_t i = std::min(idx_, path_->freq.size() - 1);
  return path_->freq[i];
}

bool ReplayPathSource::exhausted() const {
  return idx_ + 1 >= path_->backward_t.size();
}

FrequencyPathSource::Step ReplayPathSource::advance(double max_dt) {
  if (exhausted()) return {0.0, current_freq()};
  double seg_end = path_->backward_t[idx_ + 1];
  double frozen = path_->freq[idx_];
  double h = std::min(max_dt, seg_end - t_);
  t_ += h;
  if (t_ >= seg_end - 1e-15) {
    t_ = seg_end;
    ++idx_;
  }
  return {h, frozen};
}

FrequencyPath reversed_stationary_path(const SampleCounts& counts,
                                       const ModelParams& params, double dt,
                                       double horizon, Philox& rng,
                                       const WfOptions& opts) {
  if (!(dt > 0.0) || !(horizon > 0.0))
    throw std::invalid_argument("reversed_stationary_path: dt and horizon must be positive");
  WfOptions o = opts;
  o.dt = dt;
  ReversedStationaryPathSource src(counts, params, o, rng);
  FrequencyPath path;
  path.t0 = 0.0;
  path.dt = dt;
  path.values.push_back(src.current_freq());
  long steps = static_cast<long>(std::ceil(horizon / dt - 1e-9));
  for (long k = 1; k <= steps; ++k) {
    double target = static_cast<double>(k) * dt;
    while (src.current_time() < target - 1e-12) src.advance(target - src.current_time());
    path.values.push_back(src.current_freq());
  }
  return path;
}

}  // namespace latmut
