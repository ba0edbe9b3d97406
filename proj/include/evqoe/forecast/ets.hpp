#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace evqoe::forecast {

/// Additive Holt-Winters state after filtering the training series.
struct EtsFit {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;  ///< 0 when non-seasonal
    int period = 0;      ///< 0 = no seasonal component
    double level = 0.0;
    double trend = 0.0;
    std::vector<double> season;  ///< indexed by t mod period
    std::size_t n_obs = 0;
    double sse = 0.0;

    std::vector<double> forecast(std::size_t horizon) const;
};

/// Smoothing parameters chosen by minimizing one-step squared errors over the grid
/// {0.01, 0.08, ..., 0.99}; ties keep the first grid point. period = 0 fits level + trend only.
EtsFit fit_ets(std::span<const double> series, int period = 0);

}  // namespace evqoe::forecast
