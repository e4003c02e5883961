#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "latmut/stats.hpp"

namespace latmut::testing {

// CDF of a density given by log_pdf at every sorted sample point, by stacking
// fixed Gauss-Kronrod panels over the gaps. Independent of any closed-form
// normalizer: the result is normalized by the total mass over (lo, hi).
inline std::vector<double> cdf_at_sorted(const std::vector<double>& sorted,
                                         const std::function<double(double)>& log_pdf,
                                         double lo, double hi) {
  static const double xg[8] = {0.991455371120813, 0.949107912342759, 0.864864423359769,
                               0.741531185599394, 0.586087235467691, 0.405845151377397,
                               0.207784955007898, 0.0};
  static const double wg[8] = {0.022935322010529, 0.063092092629979, 0.104790010322250,
                               0.140653259715525, 0.169004726639267, 0.190350578064785,
                               0.204432940075298, 0.209482141084728};
  auto panel = [&](double a, double b) {
    if (!(b > a)) return 0.0;
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = wg[7] * std::exp(log_pdf(c));
    for (int j = 0; j < 7; ++j)
      s += wg[j] * (std::exp(log_pdf(c - h * xg[j])) + std::exp(log_pdf(c + h * xg[j])));
    return s * h;
  };
  std::vector<double> cum(sorted.size());
  double acc = 0.0;
  double prev = lo;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    // Split wide gaps so the fixed panel stays accurate.
    double a = prev, b = sorted[i];
    int pieces = 1 + static_cast<int>((b - a) / ((hi - lo) / 64.0));
    for (int k = 0; k < pieces; ++k)
      acc += panel(a + (b - a) * k / pieces, a + (b - a) * (k + 1) / pieces);
    cum[i] = acc;
    prev = b;
  }
  double total = acc;
  {
    double a = prev, b = hi;
    int pieces = 1 + static_cast<int>((b - a) / ((hi - lo) / 64.0));
    for (int k = 0; k < pieces; ++k)
      total += panel(a + (b - a) * k / pieces, a + (b - a) * (k + 1) / pieces);
  }
  for (double& c : cum) c /= total;
  return cum;
}

// One-sample KS against a density known up to normalization.
inline double ks_vs_log_pdf(std::vector<double> sample,
                            const std::function<double(double)>& log_pdf, double lo,
                            double hi) {
  std::sort(sample.begin(), sample.end());
  return ks_statistic(cdf_at_sorted(sample, log_pdf, lo, hi));
}

inline double rel_diff(double a, double b) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-300});
}

}  // namespace latmut::testing
