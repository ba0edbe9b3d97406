#pragma once

#include <span>
#include <vector>

#include "evqoe/core/rng.hpp"

namespace evqoe::service {

/// Histogram of session durations (minutes) over [0, max].
struct DurationHistogram {
    double bin_width = 2.0;
    std::vector<long long> counts;
    long long total = 0;

    /// counts / (total * bin_width); integrates to one.
    std::vector<double> density() const;
    double midpoint(std::size_t bin) const { return (static_cast<double>(bin) + 0.5) * bin_width; }
    /// Mean of the binned law (mass at midpoints).
    double mean() const;
};

DurationHistogram empirical_service_distribution(std::span<const double> durations_min,
                                                 double bin_width = 2.0);

/// Erlang density with integer shape k and rate (per minute).
double erlang_pdf(double x, int shape_k, double rate);

struct ErlangFit {
    int shape_k = 1;
    double rate = 1.0;  // per minute; shape_k / rate == sample_mean
    double rmse = 0.0;
    double sample_mean = 0.0;
    double sample_var = 0.0;
    long long n_samples = 0;
    /// round(mean^2 / var), reported alongside the scan result.
    int moment_shape = 1;
    /// RMSE of every scanned shape; index k-1.
    std::vector<double> scan_rmse;

    double mean() const { return shape_k / rate; }
};

struct FitOptions {
    double bin_width = 2.0;
    int k_max = 50;
    std::size_t min_samples = 30;
};

/// Rate from the sample mean for every candidate shape, shape by minimum histogram RMSE.
/// Throws InsufficientData below min_samples, ArgumentError on non-positive durations.
ErlangFit fit_erlang(std::span<const double> durations_min, const FitOptions& options = {});

/// sqrt(mean over bins of (empirical density - pdf(midpoint))^2)
double fit_rmse(const DurationHistogram& histogram, int shape_k, double rate);
inline double fit_rmse(const DurationHistogram& histogram, const ErlangFit& fit) {
    return fit_rmse(histogram, fit.shape_k, fit.rate);
}

/// Sum of shape_k exponential(rate) draws.
double sample_service(int shape_k, double rate, Rng& rng);
inline double sample_service(const ErlangFit& fit, Rng& rng) {
    return sample_service(fit.shape_k, fit.rate, rng);
}

}  // namespace evqoe::service
