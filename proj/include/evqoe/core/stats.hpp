#pragma once

#include <span>
#include <vector>

namespace evqoe::stats {

double mean(std::span<const double> xs);
/// Unbiased (n-1) sample variance; 0 for fewer than two samples.
double variance(std::span<const double> xs);

/// Linear interpolation between order statistics (h = (n-1)p). Input need not be sorted.
double quantile(std::span<const double> xs, double p);
double quantile_sorted(std::span<const double> sorted, double p);

double normal_cdf(double x);
/// Inverse standard normal CDF (Acklam's rational approximation with one Halley step).
double normal_quantile(double p);
/// Two-sided band multiplier z such that P(|Z| <= z) = level.
double z_for_level(double level);

/// Student-t quantile for p in {0.95, 0.975, 0.995}, df >= 1. Exact table for df <= 30,
/// interpolation in 1/df above that. Other p use a Cornish-Fisher expansion.
double t_quantile(double p, int df);

struct KsResult {
    double statistic;
    double p_value;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic Kolmogorov p-value.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

}  // namespace evqoe::stats
