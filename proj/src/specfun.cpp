#include "latmut/specfun.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace latmut {

namespace {

constexpr int kMaxTerms = 10000;
constexpr double kRelTol = 1e-16;
constexpr double kRescaleAt = 1e280;

void check_domain(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::domain_error("hyp1f1: parameters a and b must be positive");
}

}  // namespace

double LogValue::value() const { return sign * std::exp(log_magnitude); }

LogValue hyp1f1_series_direct(double a, double b, double z) {
  if (z == 0.0) return {0.0, +1};
  double term = 1.0;
  double sum = 1.0;
  double log_scale = 0.0;
  int small_streak = 0;
  for (int k = 0; k < kMaxTerms; ++k) {
    term *= (a + k) * z / ((b + k) * (k + 1.0));
    sum += term;
    if (std::fabs(term) <= kRelTol * std::fabs(sum)) {
      if (++small_streak >= 3) {
        double mag = std::fabs(sum);
        return {std::log(mag) + log_scale, sum >= 0.0 ? +1 : -1};
      }
    } else {
      small_streak = 0;
    }
    if (std::fabs(sum) > kRescaleAt || std::fabs(term) > kRescaleAt) {
      sum *= 1e-280;
      term *= 1e-280;
      log_scale += std::log(1e280);
    }
  }
  std::ostringstream msg;
  msg << "hyp1f1: series did not converge after " << kMaxTerms
      << " terms (a=" << a << ", b=" << b << ", z=" << z
      << ", last relative contribution=" << std::fabs(term) / std::fabs(sum) << ")";
  throw std::runtime_error(msg.str());
}

LogValue hyp1f1(const HypArgs& args) {
  check_domain(args.a, args.b);
  if (args.z >= 0.0) return hyp1f1_series_direct(args.a, args.b, args.z);
  LogValue v = hyp1f1_series_direct(args.b - args.a, args.b, -args.z);
  v.log_magnitude += args.z;
  return v;
}

double gamma_ratio_asym(double a, double b, long n2) {
  if (!(a + n2 > 0.0) || !(b + n2 > 0.0))
    throw std::domain_error("gamma_ratio_asym: need a + n2 > 0 and b + n2 > 0");
  double n = static_cast<double>(n2);
  return std::pow(n, a - b) * (1.0 + (a - b) * (a + b - 1.0) / (2.0 * n));
}

double log_gamma_ratio_exact(double a, double b, long n2) {
  double n = static_cast<double>(n2);
  return std::lgamma(a + n) - std::lgamma(b + n);
}

LogValue hyp1f1_asym(const HypArgs& args, AsymRegime regime, long n2, AsymOrder order) {
  check_domain(args.a, args.b);
  const double a = args.a, b = args.b, z = args.z;
  const double n = static_cast<double>(n2);

  auto apply_factor = [&](double log_lead, double factor) -> LogValue {
    if (order == AsymOrder::Leading) return {log_lead, +1};
    return {log_lead + std::log(std::fabs(factor)), factor >= 0.0 ? +1 : -1};
  };

  switch (regime) {
    case AsymRegime::LargeBetaNeg: {
      if (!(z < 0.0))
        throw std::invalid_argument("hyp1f1_asym: LargeBetaNeg requires z < 0");
      if (!(b > a))
        throw std::invalid_argument("hyp1f1_asym: LargeBetaNeg requires b > a");
      double az = std::fabs(z);
      double log_lead = std::lgamma(b) - std::lgamma(b - a) - a * std::log(az);
      double factor = 1.0 - a * (b - a - 1.0) / az;
      return apply_factor(log_lead, factor);
    }
    case AsymRegime::LargeBetaPos: {
      if (!(z > 0.0))
        throw std::invalid_argument("hyp1f1_asym: LargeBetaPos requires z > 0");
      double log_lead = std::lgamma(b) - std::lgamma(a) + z + (a - b) * std::log(z);
      double factor = 1.0 - (b - a) * (a - 1.0) / z;
      return apply_factor(log_lead, factor);
    }
    case AsymRegime::LargeN2FixedBeta: {
      if (n2 < 1)
        throw std::invalid_argument("hyp1f1_asym: LargeN2FixedBeta requires n2 >= 1");
      double factor = 1.0 + a * z / n;
      return apply_factor(0.0, factor);
    }
    case AsymRegime::ScaledBetaLt1: {
      if (n2 < 1)
        throw std::invalid_argument("hyp1f1_asym: ScaledBetaLt1 requires n2 >= 1");
      double bt = z / n;
      if (!(bt < 1.0))
        throw std::invalid_argument("hyp1f1_asym: ScaledBetaLt1 requires z/n2 < 1");
      return {-a * std::log1p(-bt), +1};
    }
    case AsymRegime::ScaledBetaGt1: {
      if (n2 < 1)
        throw std::invalid_argument("hyp1f1_asym: ScaledBetaGt1 requires n2 >= 1");
      double bt = z / n;
      if (!(bt > 1.0))
        throw std::invalid_argument("hyp1f1_asym: ScaledBetaGt1 requires z/n2 > 1");
      double log_val = 0.5 * std::log(2.0 * 3.14159265358979323846) - std::lgamma(a) +
                       (a - 1.0) * std::log(1.0 - 1.0 / bt) - (b - a) * std::log(bt) +
                       (a - 0.5) * std::log(n) + n * (bt - 1.0);
      return {log_val, +1};
    }
  }
  throw std::logic_error("hyp1f1_asym: unreachable");
}

}  // namespace latmut
