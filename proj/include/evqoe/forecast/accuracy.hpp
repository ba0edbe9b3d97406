#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace evqoe::forecast {

struct AccuracyReport {
    double mse = 0.0;
    double rmse = 0.0;
    double mae = 0.0;
    std::optional<double> mape;   ///< percent; empty when every actual is zero
    std::size_t mape_skipped = 0; ///< rows with actual = 0
    std::size_t n = 0;
};

AccuracyReport accuracy(std::span<const double> actual, std::span<const double> predicted);

/// One comparison-table row; `report` is empty and `failure` set when the model failed.
struct BacktestRow {
    std::string model;
    std::optional<AccuracyReport> report;
    std::string failure;
};

/// Predictions from a model run elsewhere, keyed by ISO week-start date.
struct ExternalPredictions {
    std::string model;
    std::vector<std::string> week_starts;
    std::vector<double> predicted;
};

/// Reads `week_start,predicted`; the model name is supplied by the caller.
ExternalPredictions parse_external_predictions(std::istream& in, std::string model);

/// Scores external predictions against the test range; mismatched weeks become a failure row.
BacktestRow score_external(const ExternalPredictions& ext, const std::vector<std::string>& test_weeks,
                           std::span<const double> actual);

/// `model,mse,rmse,mape,mae`; failed models print "NA" in every metric column.
void write_backtest_table(std::ostream& out, const std::vector<BacktestRow>& rows);

}  // namespace evqoe::forecast
