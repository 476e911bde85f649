#pragma once

#include <functional>
#include <vector>

namespace hetdecomp::stats {

// Standard normal CDF.
double normal_cdf(double x);

// Standard normal quantile. p must lie in (0, 1).
double normal_quantile(double p);

// Upper tail probability P(X > x) for X ~ chi-squared with df degrees of
// freedom. x < 0 returns 1.
double chi_squared_sf(double x, int df);

// Quantile of a sample by linear interpolation between order statistics
// (the common "type 7" definition). Sorts a copy of the input.
double sample_quantile(std::vector<double> values, double p);

// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance tol.
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol);

}  // namespace hetdecomp::stats
