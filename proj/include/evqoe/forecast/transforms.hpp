#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace evqoe::forecast {

/// Binomial weights of (1-B)^d: pi_0 = 1, pi_j = pi_{j-1} (j-1-d) / j, for j < count.
std::vector<double> frac_weights(double d, std::size_t count);

/// Values dropped at the start of a fractionally differenced series: 0 for d = 0, else ceil(d).
std::size_t frac_burn_in(double d);

/// Truncated fractional difference y'_t = sum_{j<=min(t,J)} pi_j y_{t-j} with
/// J = min(len-1, truncation); the first frac_burn_in(d) outputs are dropped.
std::vector<double> frac_diff(std::span<const double> series, double d,
                              std::size_t truncation = 100);

/// Applies (1 - B^s) D times, dropping the first D*s values.
std::vector<double> seasonal_diff(std::span<const double> series, int D, int s);

/// Maps values on the differenced scale (continuing the series after `history`) back to the
/// original scale: inverse fractional filter with lag cap `truncation`, then D seasonal
/// integrations. `truncation` must be the lag cap the forward transform used.
std::vector<double> invert_transforms(std::span<const double> differenced_future,
                                      std::span<const double> history, double d, int D, int s,
                                      std::size_t truncation);

/// Lag cap the forward transform uses on a seasonally differenced series of length n.
inline std::size_t effective_truncation(std::size_t n, std::size_t truncation) {
    return n == 0 ? 0 : (n - 1 < truncation ? n - 1 : truncation);
}

}  // namespace evqoe::forecast
