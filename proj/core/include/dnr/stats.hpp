#pragma once

#include <cstddef>
#include <span>

namespace dnr::stats {

double mean(std::span<const double> xs);

// Unbiased sample standard deviation (n-1 denominator); 0 for n < 2.
double sample_stddev(std::span<const double> xs);

// Standard error of the mean: sample_stddev / sqrt(n).
double standard_error(std::span<const double> xs);

// Regularized incomplete beta function I_x(a, b) via the Lentz continued
// fraction; a, b > 0, x in [0, 1]. Accurate to ~1e-14 for the argument
// ranges used here.
double regularized_incomplete_beta(double a, double b, double x);

// CDF of Student's t distribution with `dof` degrees of freedom.
double student_t_cdf(double t, double dof);

// One-sided paired t-test of H1: mean(a - b) > 0.
struct PairedTTest {
    std::size_t n = 0;
    double mean_diff = 0.0;
    double t_stat = 0.0;
    double p_value = 1.0;  // P(observing this large a t under H0)
};

PairedTTest paired_one_sided(std::span<const double> a, std::span<const double> b);

}  // namespace dnr::stats
