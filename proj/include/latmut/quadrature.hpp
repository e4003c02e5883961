#pragma once

#include <functional>

namespace latmut {

// Adaptive Gauss-Kronrod (G7,K15) on [lo,hi].
double adaptive_gk(const std::function<double(double)>& f, double lo, double hi,
                   double rel_tol = 1e-12, int max_depth = 52);

// log of integral over (lo,hi) of x^(a-1) (1-x)^(b-1) e^(beta x), 0 <= lo < hi <= 1.
// Endpoint singularities for a < 1 or b < 1 are removed by power substitution,
// and the integrand is rescaled by its log maximum, so exponents of e^beta
// scale never overflow. Serves as the independent oracle for everything the
// series route computes.
double log_tilted_beta_integral(double a, double b, double beta, double lo = 0.0,
                                double hi = 1.0, double rel_tol = 1e-12);

}  // namespace latmut
