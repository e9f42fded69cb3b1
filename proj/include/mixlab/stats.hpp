#pragma once

#include <optional>
#include <span>

namespace mixlab::stats {

double mean(std::span<const double> xs);
/// Unbiased sample variance; empty for fewer than two values.
std::optional<double> sample_variance(std::span<const double> xs);

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double x, double a, double b);

/// P(T > t) for Student's t with `dof` degrees of freedom (dof may be
/// fractional).
double student_t_upper_tail(double t, double dof);

struct WelchResult {
  double t = 0.0;
  double p = 0.5;
  double dof = 0.0;
};

/// Unequal-variance two-sample t-test of H1: mean(a) > mean(b), with the
/// Welch-Satterthwaite degrees of freedom.
WelchResult welch_t_one_tailed(std::span<const double> a, std::span<const double> b);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace mixlab::stats
