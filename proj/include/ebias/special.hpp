#pragma once

namespace ebias::special {

double log_beta(double a, double b);

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation
/// (modified Lentz) converged to 1e-13 relative.
double regularized_incomplete_beta(double x, double a, double b);

/// CDF of Student's t distribution with df degrees of freedom (df > 0).
double student_t_cdf(double t, double df);

/// Two-sided tail probability P(|T_df| >= |t|).
double student_t_two_sided_p(double t, double df);

/// ln(n!) with a cached table for small n.
double log_factorial(unsigned n);

} // namespace ebias::special
