#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evqoe/forecast/sarimax.hpp"

namespace evqoe::forecast {

struct SarimaxGrid {
    std::vector<int> p{0, 1, 2};
    std::vector<int> q{0, 1, 2};
    std::vector<double> d{0.4, 0.6, 0.8};
    std::vector<int> P{0, 1};
    std::vector<int> D{1};
    std::vector<int> Q{0, 1};
    int s = 52;
    std::size_t frac_truncation = 100;

    /// All combinations in lexicographic (p, d, q, P, D, Q) order.
    std::vector<SarimaxSpec> expand(int n_exog) const;
};

struct LeaderboardEntry {
    SarimaxSpec spec;
    std::optional<double> mape;  ///< empty when the fit failed or did not converge
    bool converged = false;
    std::string failure;
};

struct GridSearchResult {
    SarimaxSpec best;
    double best_mape = 0.0;
    std::vector<LeaderboardEntry> leaderboard;  ///< in grid order
};

/// Fits on y[0, n - validation_weeks), scores MAPE on the rest with the realized exog.
/// Throws FitError on a failed fit and SarimaxSpec errors on invalid input.
double validation_mape(std::span<const double> y, const std::vector<std::vector<double>>& exog,
                       const SarimaxSpec& spec, std::size_t validation_weeks,
                       const SarimaxFitOptions& options = {});

/// Fits every combination (concurrently, up to `threads` workers; 0 = hardware concurrency).
/// Lowest MAPE wins; ties go to fewer parameters, then grid order.
GridSearchResult grid_search(std::span<const double> y, const std::vector<std::vector<double>>& exog,
                             const SarimaxGrid& grid, std::size_t validation_weeks,
                             const SarimaxFitOptions& options = {}, unsigned threads = 0);

/// Least-squares line through `history`, evaluated at the next `horizon` indices.
std::vector<double> extrapolate_linear(std::span<const double> history, std::size_t horizon);

}  // namespace evqoe::forecast
