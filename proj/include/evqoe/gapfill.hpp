#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "evqoe/core/time.hpp"

namespace evqoe::gapfill {

/// Contiguous daily request counts; days without requests hold 0.
struct DailySeries {
    std::string site_id;
    Date start_date;
    std::vector<double> values;

    Date end_date() const {
        return start_date + std::chrono::days{static_cast<long long>(values.size()) - 1};
    }
};

struct GapSpec {
    Date gap_start = make_date(2020, 1, 1);
    Date gap_end = make_date(2021, 6, 30);  // inclusive
    /// Nominal window length; an even value is widened by one so the window can be centered.
    int window_m = 30;

    int effective_window() const { return window_m % 2 == 0 ? window_m + 1 : window_m; }
    bool empty() const { return gap_end < gap_start; }
};

/// Per-day flag: true where the day lies inside the gap.
std::vector<bool> gap_mask(const DailySeries& series, const GapSpec& gap);

/// Leave-one-out centered moving average over non-gap days. Gap days whose window holds fewer
/// than (M-1)/2 non-gap days are linearly interpolated between the nearest computable values.
std::vector<double> moving_average_trend(const DailySeries& series, const GapSpec& gap);

struct ResidualDistribution {
    std::vector<double> samples;  // (N - trend) / trend on non-gap days, each >= -1
    std::size_t contributing_days = 0;
    std::size_t skipped_zero_trend = 0;

    double mean() const;
};

ResidualDistribution relative_residuals(const DailySeries& series, const std::vector<double>& trend,
                                        const GapSpec& gap, std::size_t min_samples = 50);

/// One value per gap day: round(max(0, trend (1 + delta))), delta drawn uniformly from the
/// empirical residual samples.
std::vector<double> reconstruct_gap(const std::vector<double>& trend,
                                    const ResidualDistribution& residuals,
                                    const std::vector<bool>& mask, std::uint64_t seed);

struct FilledSeries {
    DailySeries series;
    std::vector<bool> filled;
    std::vector<double> trend;
    ResidualDistribution residuals;
};

/// Replaces gap days with a seeded reconstruction; other days pass through untouched.
/// With draws > 1 each gap day is the rounded mean of that many independent draws.
FilledSeries fill_gap(const DailySeries& series, const GapSpec& gap, std::uint64_t seed,
                      int draws = 1);

void write_filled_series(std::ostream& out, const FilledSeries& filled);
/// Reads `date,n_requests,filled_flag`; the site id is supplied by the caller.
FilledSeries parse_filled_series(std::istream& in, const std::string& site_id);

}  // namespace evqoe::gapfill
