#pragma once

// Special functions behind the distribution tails used by the tests.
// Accuracy target: 1e-10 relative across the parameter ranges used here.

namespace rehearsal::analytics {

/// Regularized incomplete beta I_x(a, b), a, b > 0, x in [0, 1].
double incomplete_beta(double a, double b, double x);

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double incomplete_gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double incomplete_gamma_q(double a, double x);

/// Two-sided tail of Student's t: P(|T| >= |t|) with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);
/// Student's t CDF P(T <= t).
double student_t_cdf(double t, double df);

/// Upper tail of the chi-square distribution: P(X >= x).
double chi_square_sf(double x, double df);

}  // namespace rehearsal::analytics
