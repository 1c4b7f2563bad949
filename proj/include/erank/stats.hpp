#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace erank {

inline constexpr double kLogSqrt2Pi = 0.9189385332046727417803297;  // log(sqrt(2*pi))

inline double norm_pdf(double z) { return std::exp(-0.5 * z * z - kLogSqrt2Pi); }

inline double log_norm_pdf(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return -0.5 * z * z - kLogSqrt2Pi - std::log(sd);
}

// Standard normal CDF, accurate in both tails (erfc-based).
inline double norm_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

// Inverse standard normal CDF.
double norm_quantile(double p);

// Upper quantile of the F distribution: x with P(F_{d1,d2} <= x) = p.
double f_quantile(double p, double d1, double d2);

// Survival function of the chi-squared distribution, P(X > x).
double chisq_sf(double x, double df);

double mean(std::span<const double> v);
double variance(std::span<const double> v);  // n-1 denominator; 0 for n < 2

// Empirical quantile by nearest-rank order statistic on a sorted copy.
double sample_quantile(std::span<const double> v, double p);

}  // namespace erank
