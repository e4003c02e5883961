#include "latmut/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace latmut {

Summary summarize(const std::vector<double>& xs) {
  Summary s;
  s.n = xs.size();
  if (s.n == 0) return s;
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(s.n);
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  s.mean = m;
  s.variance = s.n > 1 ? v / static_cast<double>(s.n - 1) : 0.0;
  s.std_error = s.n > 0 ? std::sqrt(s.variance / static_cast<double>(s.n)) : 0.0;
  return s;
}

double log_choose(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

namespace {

double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 10000; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16)
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw std::runtime_error("reg_gamma_p: series did not converge");
}

double gamma_q_contfrac(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16)
      return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw std::runtime_error("reg_gamma_q: continued fraction did not converge");
}

}  // namespace

double reg_gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw std::domain_error("reg_gamma_p: need a > 0, x >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_contfrac(a, x);
}

double reg_gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw std::domain_error("reg_gamma_q: need a > 0, x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_contfrac(a, x);
}

double gamma_cdf(double x, double shape, double rate) {
  if (x <= 0.0) return 0.0;
  return reg_gamma_p(shape, rate * x);
}

double exp_cdf(double x, double mean) {
  if (x <= 0.0) return 0.0;
  return -std::expm1(-x / mean);
}

double chi2_sf(double x, double dof) {
  if (x <= 0.0) return 1.0;
  return reg_gamma_q(0.5 * dof, 0.5 * x);
}

double kolmogorov_sf(double t) {
  if (t <= 0.0) return 1.0;
  if (t < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    double term = std::exp(-2.0 * k * k * t * t);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-18) break;
  }
  return std::min(1.0, std::max(0.0, 2.0 * sum));
}

double ks_statistic(const std::vector<double>& cdf_at_sorted) {
  std::size_t n = cdf_at_sorted.size();
  if (n == 0) throw std::invalid_argument("ks_statistic: empty sample");
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double f = cdf_at_sorted[i];
    double lo = f - static_cast<double>(i) / static_cast<double>(n);
    double hi = static_cast<double>(i + 1) / static_cast<double>(n) - f;
    d = std::max(d, std::max(lo, hi));
  }
  return d;
}

double ks_pvalue(double d, std::size_t n) {
  double sn = std::sqrt(static_cast<double>(n));
  // Stephens' small-sample adjustment.
  return kolmogorov_sf(d * (sn + 0.12 + 0.11 / sn));
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    double fa = static_cast<double>(i) / static_cast<double>(a.size());
    double fb = static_cast<double>(j) / static_cast<double>(b.size());
    d = std::max(d, std::fabs(fa - fb));
  }
  return d;
}

double ks_two_sample_pvalue(double d, std::size_t n, std::size_t m) {
  double ne = static_cast<double>(n) * static_cast<double>(m) /
              static_cast<double>(n + m);
  double sn = std::sqrt(ne);
  return kolmogorov_sf(d * (sn + 0.12 + 0.11 / sn));
}

double tv_distance(const std::vector<double>& p, const std::vector<double>& q) {
  std::size_t n = std::max(p.size(), q.size());
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double pi = i < p.size() ? p[i] : 0.0;
    double qi = i < q.size() ? q[i] : 0.0;
    s += std::fabs(pi - qi);
  }
  return 0.5 * s;
}

double chi2_gof_pvalue(const std::vector<long>& counts, const std::vector<double>& pmf,
                       double min_expected) {
  if (counts.size() != pmf.size())
    throw std::invalid_argument("chi2_gof_pvalue: size mismatch");
  long total = 0;
  for (long c : counts) total += c;
  if (total <= 0) throw std::invalid_argument("chi2_gof_pvalue: empty counts");

  // Pool from the right so every expected count reaches the floor.
  std::vector<double> exp_pooled;
  std::vector<double> obs_pooled;
  double e_acc = 0.0, o_acc = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    e_acc += pmf[i] * static_cast<double>(total);
    o_acc += static_cast<double>(counts[i]);
    if (e_acc >= min_expected) {
      exp_pooled.push_back(e_acc);
      obs_pooled.push_back(o_acc);
      e_acc = o_acc = 0.0;
    }
  }
  if (e_acc > 0.0 || o_acc > 0.0) {
    if (exp_pooled.empty()) {
      exp_pooled.push_back(e_acc);
      obs_pooled.push_back(o_acc);
    } else {
      exp_pooled.back() += e_acc;
      obs_pooled.back() += o_acc;
    }
  }
  if (exp_pooled.size() < 2)
    throw std::invalid_argument("chi2_gof_pvalue: too few cells after pooling");
  double stat = 0.0;
  for (std::size_t i = 0; i < exp_pooled.size(); ++i) {
    double diff = obs_pooled[i] - exp_pooled[i];
    stat += diff * diff / exp_pooled[i];
  }
  return chi2_sf(stat, static_cast<double>(exp_pooled.size() - 1));
}

std::vector<double> empirical_pmf(const std::vector<int>& values, int max_value) {
  std::vector<double> pmf(static_cast<std::size_t>(max_value) + 1, 0.0);
  for (int v : values) {
    if (v < 0 || v > max_value) throw std::out_of_range("empirical_pmf: value out of range");
    pmf[static_cast<std::size_t>(v)] += 1.0;
  }
  for (double& p : pmf) p /= static_cast<double>(values.size());
  return pmf;
}

}  // namespace latmut
