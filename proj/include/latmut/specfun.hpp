#pragma once

#include <cstdint>

namespace latmut {

// Overflow-safe representation sign * exp(log_magnitude). Everything this
// module produces is positive in practice; the sign slot is kept so that
// asymptotic correction factors can go negative without losing information.
struct LogValue {
  double log_magnitude = 0.0;
  int sign = +1;

  double value() const;
};

struct HypArgs {
  double a = 0.0;
  double b = 0.0;
  double z = 0.0;  // houses the selection argument
};

// Asymptotic regimes for the confluent hypergeometric function. The scaled
// regimes read z = beta_tilde * n2; the args carry the full (a, b, z) of the
// function being approximated, with n2 passed alongside as the large part.
enum class AsymRegime {
  LargeBetaNeg,
  LargeBetaPos,
  LargeN2FixedBeta,
  ScaledBetaLt1,
  ScaledBetaGt1,
};

enum class AsymOrder { Leading, FirstCorrection };

// 1F1(a;b;z) in log space. Direct series for z >= 0; for z < 0 the evaluation
// goes through e^z * 1F1(b-a;b;-z) to avoid the alternating-series cancellation.
LogValue hyp1f1(const HypArgs& args);

// Raw series evaluation without the transform; kept public so the transform
// identity can be checked against an independent route.
LogValue hyp1f1_series_direct(double a, double b, double z);

// n2^(a-b) * (1 + (a-b)(a+b-1)/(2 n2)).
double gamma_ratio_asym(double a, double b, long n2);
// Exact counterpart via lgamma, for error measurement.
double log_gamma_ratio_exact(double a, double b, long n2);

LogValue hyp1f1_asym(const HypArgs& args, AsymRegime regime, long n2,
                     AsymOrder order = AsymOrder::FirstCorrection);

}  // namespace latmut
