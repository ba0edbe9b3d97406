#include "evqoe/gapfill.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "evqoe/core/csv.hpp"
#include "evqoe/core/errors.hpp"
#include "evqoe/core/rng.hpp"

namespace evqoe::gapfill {

std::vector<bool> gap_mask(const DailySeries& series, const GapSpec& gap) {
    std::vector<bool> mask(series.values.size(), false);
    if (gap.empty()) return mask;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        const Date d = series.start_date + std::chrono::days{static_cast<long long>(i)};
        mask[i] = d >= gap.gap_start && d <= gap.gap_end;
    }
    return mask;
}

std::vector<double> moving_average_trend(const DailySeries& series, const GapSpec& gap) {
    const auto n = series.values.size();
    if (n < 3) throw ArgumentError("moving average trend needs at least 3 days");
    if (gap.window_m < 3) throw ArgumentError("moving average window must be >= 3");
    const int m = gap.effective_window();
    if (m != gap.window_m) {
        spdlog::info("moving average window M={} widened to {} for a centered window",
                     gap.window_m, m);
    }
    const auto half = static_cast<long long>((m - 1) / 2);
    const auto mask = gap_mask(series, gap);

    // Prefix sums over usable (non-gap) days.
    std::vector<double> sum(n + 1, 0.0);
    std::vector<long long> cnt(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const bool use = !mask[i];
        sum[i + 1] = sum[i] + (use ? series.values[i] : 0.0);
        cnt[i + 1] = cnt[i] + (use ? 1 : 0);
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> trend(n, nan);
    const auto last = static_cast<long long>(n) - 1;
    for (long long d = 0; d <= last; ++d) {
        const auto lo = static_cast<std::size_t>(std::max(0LL, d - half));
        const auto hi = static_cast<std::size_t>(std::min(last, d + half)) + 1;
        double s = sum[hi] - sum[lo];
        long long c = cnt[hi] - cnt[lo];
        const auto du = static_cast<std::size_t>(d);
        if (!mask[du]) {
            s -= series.values[du];
            --c;
        }
        // A gap day needs half a window of usable days; thinner windows give noisy anchors.
        const long long need = mask[du] ? half : 1;
        if (c >= need) trend[du] = s / static_cast<double>(c);
    }

    // Bridge stretches with no usable day in their window.
    std::size_t i = 0;
    while (i < n) {
        if (!std::isnan(trend[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && std::isnan(trend[j])) ++j;
        const bool has_left = i > 0;
        const bool has_right = j < n;
        if (!has_left && !has_right) throw ArgumentError("moving average trend: no usable days");
        for (std::size_t k = i; k < j; ++k) {
            if (has_left && has_right) {
                const double t = static_cast<double>(k - (i - 1)) / static_cast<double>(j - (i - 1));
                trend[k] = trend[i - 1] + t * (trend[j] - trend[i - 1]);
            } else {
                trend[k] = has_left ? trend[i - 1] : trend[j];
            }
        }
        i = j;
    }
    return trend;
}

double ResidualDistribution::mean() const {
    if (samples.empty()) return 0.0;
    return std::accumulate(samples.begin(), samples.end(), 0.0) /
           static_cast<double>(samples.size());
}

ResidualDistribution relative_residuals(const DailySeries& series, const std::vector<double>& trend,
                                        const GapSpec& gap, std::size_t min_samples) {
    if (trend.size() != series.values.size()) {
        throw ArgumentError("relative residuals: trend and series lengths differ");
    }
    const auto mask = gap_mask(series, gap);
    ResidualDistribution dist;
    for (std::size_t i = 0; i < trend.size(); ++i) {
        if (mask[i]) continue;
        if (!(trend[i] > 0.0)) {
            ++dist.skipped_zero_trend;
            continue;
        }
        dist.samples.push_back((series.values[i] - trend[i]) / trend[i]);
        ++dist.contributing_days;
    }
    if (dist.samples.size() < min_samples) {
        throw InsufficientData(fmt::format("relative residuals: {} usable days, need {}",
                                           dist.samples.size(), min_samples));
    }
    return dist;
}

std::vector<double> reconstruct_gap(const std::vector<double>& trend,
                                    const ResidualDistribution& residuals,
                                    const std::vector<bool>& mask, std::uint64_t seed) {
    if (mask.size() != trend.size()) throw ArgumentError("reconstruct: mask/trend length mismatch");
    std::vector<double> out;
    if (residuals.samples.empty()) {
        if (std::find(mask.begin(), mask.end(), true) != mask.end()) {
            throw ArgumentError("reconstruct: empty residual distribution");
        }
        return out;
    }
    Rng rng(seed);
    for (std::size_t i = 0; i < trend.size(); ++i) {
        if (!mask[i]) continue;
        const double delta = residuals.samples[rng.index(residuals.samples.size())];
        out.push_back(std::round(std::max(0.0, trend[i] * (1.0 + delta))));
    }
    return out;
}

FilledSeries fill_gap(const DailySeries& series, const GapSpec& gap, std::uint64_t seed, int draws) {
    if (draws < 1) throw ArgumentError("fill_gap: draws must be >= 1");
    FilledSeries result;
    result.series = series;
    result.filled = gap_mask(series, gap);
    const bool any_gap = std::find(result.filled.begin(), result.filled.end(), true) !=
                         result.filled.end();
    if (!any_gap) {
        if (!gap.empty()) spdlog::info("gap does not intersect series of {}", series.site_id);
        return result;
    }
    result.trend = moving_average_trend(series, gap);
    result.residuals = relative_residuals(series, result.trend, gap);

    std::vector<double> acc;
    for (int k = 0; k < draws; ++k) {
        const std::uint64_t s = draws == 1 ? seed : derive_seed(seed, static_cast<std::uint64_t>(k));
        auto draw = reconstruct_gap(result.trend, result.residuals, result.filled, s);
        if (acc.empty()) acc.assign(draw.size(), 0.0);
        for (std::size_t i = 0; i < draw.size(); ++i) acc[i] += draw[i];
    }
    std::size_t j = 0;
    for (std::size_t i = 0; i < result.filled.size(); ++i) {
        if (!result.filled[i]) continue;
        result.series.values[i] = draws == 1 ? acc[j] : std::round(acc[j] / draws);
        ++j;
    }
    return result;
}

void write_filled_series(std::ostream& out, const FilledSeries& filled) {
    csv::write_row(out, {"date", "n_requests", "filled_flag"});
    const auto& s = filled.series;
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        const Date d = s.start_date + std::chrono::days{static_cast<long long>(i)};
        const bool f = i < filled.filled.size() && filled.filled[i];
        csv::write_row(out, {format_date(d), csv::format_double(s.values[i]), f ? "1" : "0"});
    }
}

FilledSeries parse_filled_series(std::istream& in, const std::string& site_id) {
    if (!in) throw IoError("filled series not readable");
    csv::Reader reader(in);
    auto header = reader.next();
    if (!header) throw SchemaError("filled series: empty file");
    const auto idx = csv::require_columns(*header, {"date", "n_requests", "filled_flag"}, "filled series");
    FilledSeries out;
    out.series.site_id = site_id;
    std::optional<Date> prev;
    while (auto row = reader.next()) {
        if (row->size() != header->size()) {
            throw SchemaError(fmt::format("filled series: malformed line {}", reader.line()));
        }
        auto d = parse_date((*row)[idx[0]]);
        auto v = csv::parse_double((*row)[idx[1]]);
        const auto& f = (*row)[idx[2]];
        if (!d || !v || (f != "0" && f != "1")) {
            throw SchemaError(fmt::format("filled series: malformed line {}", reader.line()));
        }
        if (prev && *d != *prev + std::chrono::days{1}) {
            throw SchemaError(fmt::format("filled series: dates not contiguous at line {}", reader.line()));
        }
        if (!prev) out.series.start_date = *d;
        prev = d;
        out.series.values.push_back(*v);
        out.filled.push_back(f == "1");
    }
    return out;
}

}  // namespace evqoe::gapfill
