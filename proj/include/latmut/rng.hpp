#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace latmut {

// Philox4x32-10 counter-based generator. A stream is keyed by (seed, stream);
// replicate r of an experiment uses stream r, so results do not depend on how
// replicates are scheduled across threads.
class Philox {
 public:
  Philox(std::uint64_t seed, std::uint64_t stream) {
    key_[0] = static_cast<std::uint32_t>(seed);
    key_[1] = static_cast<std::uint32_t>(seed >> 32);
    ctr_[0] = 0;
    ctr_[1] = 0;
    ctr_[2] = static_cast<std::uint32_t>(stream);
    ctr_[3] = static_cast<std::uint32_t>(stream >> 32);
    buf_pos_ = 4;
  }

  std::uint32_t next_u32() {
    if (buf_pos_ == 4) {
      buf_ = block();
      bump();
      buf_pos_ = 0;
    }
    return buf_[buf_pos_++];
  }

  std::uint64_t next_u64() {
    std::uint64_t lo = next_u32();
    std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  // Uniform on the open interval (0,1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54;
  }

  double normal() {
    if (have_cached_normal_) {
      have_cached_normal_ = false;
      return cached_normal_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_normal_ = r * std::sin(a);
    have_cached_normal_ = true;
    return r * std::cos(a);
  }

  double exponential(double rate = 1.0) { return -std::log(uniform()) / rate; }

  // Marsaglia-Tsang for shape >= 1, boosted for shape < 1. Rate parameterization.
  double gamma(double shape, double rate = 1.0) {
    if (!(shape > 0.0) || !(rate > 0.0))
      throw std::invalid_argument("gamma: shape and rate must be positive");
    double boost = 1.0;
    if (shape < 1.0) {
      boost = std::pow(uniform(), 1.0 / shape);
      shape += 1.0;
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return boost * d * v / rate;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
        return boost * d * v / rate;
    }
  }

  double beta(double a, double b) {
    double x = gamma(a);
    double y = gamma(b);
    return x / (x + y);
  }

  // Exact Poisson: Knuth multiplication for small means, transformed
  // rejection (PTRS) for large ones.
  long poisson(double mean) {
    if (!(mean >= 0.0)) throw std::invalid_argument("poisson: mean must be >= 0");
    if (mean <= 32.0) return poisson_knuth(mean);
    return poisson_ptrs(mean);
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  long poisson_knuth(double mean) {
    if (mean <= 0.0) return 0;
    double limit = std::exp(-mean);
    double prod = uniform();
    long k = 0;
    while (prod > limit) {
      prod *= uniform();
      ++k;
    }
    return k;
  }

  // Hoermann's PTRS transformed rejection, exact for mean >= ~10.
  long poisson_ptrs(double mu) {
    const double log_mu = std::log(mu);
    const double b = 0.931 + 2.53 * std::sqrt(mu);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
      double u = uniform() - 0.5;
      double v = uniform();
      double us = 0.5 - std::fabs(u);
      double kd = std::floor((2.0 * a / us + b) * u + mu + 0.43);
      if (us >= 0.07 && v <= v_r) return static_cast<long>(kd);
      if (kd < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
          kd * log_mu - mu - std::lgamma(kd + 1.0))
        return static_cast<long>(kd);
    }
  }

  static std::uint32_t mulhi(std::uint32_t a, std::uint32_t b) {
    return static_cast<std::uint32_t>((static_cast<std::uint64_t>(a) * b) >> 32);
  }

  void bump() {
    if (++ctr_[0] != 0) return;
    if (++ctr_[1] != 0) return;
    if (++ctr_[2] != 0) return;
    ++ctr_[3];
  }

  std::array<std::uint32_t, 4> block() const {
    constexpr std::uint32_t kM0 = 0xD2511F53u;
    constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u;
    constexpr std::uint32_t kW1 = 0xBB67AE85u;
    std::array<std::uint32_t, 4> c = ctr_;
    std::uint32_t k0 = key_[0], k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
      std::uint32_t lo0 = c[0] * kM0;
      std::uint32_t hi0 = mulhi(c[0], kM0);
      std::uint32_t lo1 = c[2] * kM1;
      std::uint32_t hi1 = mulhi(c[2], kM1);
      c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
      k0 += kW0;
      k1 += kW1;
    }
    return c;
  }

  std::array<std::uint32_t, 2> key_{};
  std::array<std::uint32_t, 4> ctr_{};
  std::array<std::uint32_t, 4> buf_{};
  int buf_pos_ = 4;
  double cached_normal_ = 0.0;
  bool have_cached_normal_ = false;
};

}  // namespace latmut
