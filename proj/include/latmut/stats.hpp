#pragma once

#include <cstddef>
#include <vector>

namespace latmut {

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double std_error = 0.0;
};

Summary summarize(const std::vector<double>& xs);

double log_choose(double n, double k);
double log_beta(double a, double b);

// Regularized incomplete gamma P(a,x) and Q(a,x) = 1 - P(a,x).
double reg_gamma_p(double a, double x);
double reg_gamma_q(double a, double x);

double gamma_cdf(double x, double shape, double rate);
double exp_cdf(double x, double mean);
double chi2_sf(double x, double dof);

// Kolmogorov limiting distribution: P(sup |B| > t), the KS survival function.
double kolmogorov_sf(double t);

// One-sample KS statistic of a sample against a CDF sampled at the sorted
// points: cdf_at_sorted[i] = F(x_(i)).
double ks_statistic(const std::vector<double>& cdf_at_sorted);
double ks_pvalue(double d, std::size_t n);

// Two-sample KS statistic and asymptotic p-value.
double ks_two_sample(std::vector<double> a, std::vector<double> b);
double ks_two_sample_pvalue(double d, std::size_t n, std::size_t m);

// Total variation distance between two pmfs on a common index set.
double tv_distance(const std::vector<double>& p, const std::vector<double>& q);

// Pearson chi-square test of observed counts against a pmf, pooling cells from
// the right until every expected count is >= min_expected. Returns the p-value.
double chi2_gof_pvalue(const std::vector<long>& counts, const std::vector<double>& pmf,
                       double min_expected = 5.0);

// Empirical pmf over {0..max_value} from integer observations.
std::vector<double> empirical_pmf(const std::vector<int>& values, int max_value);

}  // namespace latmut
