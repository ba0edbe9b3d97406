#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace evqoe::forecast {

/// Sample autocorrelations rho_0..rho_max_lag. Throws ArgumentError on a constant series
/// or when the series is not longer than max_lag.
std::vector<double> acf(std::span<const double> series, std::size_t max_lag);

/// Partial autocorrelations phi_11..phi_kk (index 0 holds lag 1) via Durbin-Levinson.
std::vector<double> pacf(std::span<const double> series, std::size_t max_lag);

struct AdfCriticalValues {
    double one_percent;
    double five_percent;
    double ten_percent;
};

/// Constant-case (no trend) Dickey-Fuller critical values for sample size n.
AdfCriticalValues adf_critical_values(std::size_t n);

struct AdfResult {
    double statistic = 0.0;
    std::size_t lags_used = 0;
    std::size_t n_obs = 0;
    AdfCriticalValues critical{};
    bool reject_1 = false;
    bool reject_5 = false;
    bool reject_10 = false;
};

/// Augmented Dickey-Fuller test with constant; lag order chosen by AIC over 0..max_lags
/// on a common sample, then re-estimated on all usable observations.
AdfResult adf_test(std::span<const double> series, std::size_t max_lags);

}  // namespace evqoe::forecast
