#include "evqoe/forecast/accuracy.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "evqoe/core/csv.hpp"
#include "evqoe/core/errors.hpp"

namespace evqoe::forecast {

AccuracyReport accuracy(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.size() != predicted.size()) throw ArgumentError("accuracy: length mismatch");
    if (actual.empty()) throw ArgumentError("accuracy: empty input");
    AccuracyReport r;
    r.n = actual.size();
    double se = 0.0, ae = 0.0, ape = 0.0;
    std::size_t ape_n = 0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double e = actual[i] - predicted[i];
        se += e * e;
        ae += std::abs(e);
        if (actual[i] != 0.0) {
            ape += std::abs(e / actual[i]);
            ++ape_n;
        } else {
            ++r.mape_skipped;
        }
    }
    const double n = static_cast<double>(r.n);
    r.mse = se / n;
    r.rmse = std::sqrt(r.mse);
    r.mae = ae / n;
    if (ape_n > 0) r.mape = 100.0 * ape / static_cast<double>(ape_n);
    return r;
}

ExternalPredictions parse_external_predictions(std::istream& in, std::string model) {
    csv::Reader reader(in);
    const auto head = reader.next();
    if (!head) throw SchemaError("external predictions: empty file");
    const auto& header = *head;
    const auto idx = csv::require_columns(header, {"week_start", "predicted"}, "external predictions");
    ExternalPredictions ext;
    ext.model = std::move(model);
    while (auto rec = reader.next()) {
        const auto& row = *rec;
        if (row.size() != header.size()) {
            throw SchemaError(fmt::format("external predictions: line {} has {} fields", reader.line(), row.size()));
        }
        ext.week_starts.push_back(row[idx[0]]);
        const auto v = csv::parse_double(row[idx[1]]);
        if (!v) throw SchemaError(fmt::format("external predictions: line {} has a bad predicted value", reader.line()));
        ext.predicted.push_back(*v);
    }
    return ext;
}

BacktestRow score_external(const ExternalPredictions& ext, const std::vector<std::string>& test_weeks,
                           std::span<const double> actual) {
    BacktestRow row{ext.model, std::nullopt, {}};
    if (ext.predicted.size() != test_weeks.size()) {
        row.failure = fmt::format("expected {} predictions, got {}", test_weeks.size(), ext.predicted.size());
        return row;
    }
    for (std::size_t i = 0; i < test_weeks.size(); ++i) {
        if (ext.week_starts[i] != test_weeks[i]) {
            row.failure = fmt::format("week {} does not match test week {}", ext.week_starts[i], test_weeks[i]);
            return row;
        }
    }
    row.report = accuracy(actual, ext.predicted);
    return row;
}

void write_backtest_table(std::ostream& out, const std::vector<BacktestRow>& rows) {
    csv::write_row(out, {"model", "mse", "rmse", "mape", "mae"});
    for (const auto& r : rows) {
        if (!r.report) {
            csv::write_row(out, {r.model, "NA", "NA", "NA", "NA"});
            continue;
        }
        const auto& a = *r.report;
        csv::write_row(out, {r.model, csv::format_fixed(a.mse, 2), csv::format_fixed(a.rmse, 2),
                             a.mape ? csv::format_fixed(*a.mape, 2) + "%" : std::string("NA"),
                             csv::format_fixed(a.mae, 2)});
    }
}

}  // namespace evqoe::forecast
