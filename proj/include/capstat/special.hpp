#pragma once

namespace capstat {

// Standard normal CDF, accurate to ~1e-16 via erfc.
double normal_cdf(double x);

// Inverse standard normal CDF on (0,1). Rational initial guess refined by two
// Halley steps against the exact CDF; absolute error < 1e-14 over (1e-300, 1-1e-16).
double normal_quantile(double p);

// Regularized incomplete beta I_x(a,b), continued-fraction (modified Lentz)
// evaluation with the symmetry transform for x beyond the central region.
// Absolute accuracy better than 1e-13 for a,b in the ranges used here.
double regularized_incomplete_beta(double a, double b, double x);

// P(T <= t) for Student's t with nu > 0 degrees of freedom, via
// I_x(nu/2, 1/2) with x = nu/(nu + t^2). Documented accuracy >= 1e-10.
double student_t_cdf(double t, double nu);

}  // namespace capstat
