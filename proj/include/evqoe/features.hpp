#pragma once

#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evqoe/core/time.hpp"
#include "evqoe/gapfill.hpp"
#include "evqoe/qoe_metrics.hpp"

namespace evqoe::features {

struct TimestampFeatures {
    int weekday = 0;        // Monday = 0 .. Sunday = 6
    int day_of_month = 1;   // 1..31
    int day_of_year = 1;    // 1..365, day 366 folded onto 365
    int month = 1;          // 1..12
    int week_of_year = 1;   // ISO week, 1..53
    int week_of_month = 1;  // ceil(day / 7), capped at 4
    int quarter = 1;        // 1..4
    int year = 2018;
    int working_day = 1;    // 0 on weekends and holidays
};

TimestampFeatures calendar_features(Date date, const qoe::HolidayCalendar& holidays);

/// Step-function registry of EV and public-charger counts per scope
/// ("province" or "region:<code>") and metric ("evs" or "evcs").
class Registry {
public:
    void add(std::string scope, std::string metric, Date date, double value);
    /// Last value at or before `date`; throws MissingExogData before the first entry.
    double lookup(std::string_view scope, std::string_view metric, Date date) const;
    bool has(std::string_view scope, std::string_view metric) const;
    const std::vector<std::pair<Date, double>>& series(std::string_view scope,
                                                       std::string_view metric) const;
    /// All (scope, metric) keys in sorted order.
    std::vector<std::pair<std::string, std::string>> keys() const;

private:
    std::map<std::pair<std::string, std::string>, std::vector<std::pair<Date, double>>, std::less<>>
        series_;
};

/// Reads `date,scope,metric,value`. Non-monotone stock series are logged, not rejected.
Registry parse_registry(std::istream& in);
void write_registry(std::ostream& out, const Registry& registry);

struct ServiceFeatures {
    double rolling_avg_requests = 0.0;
    double province_evcs = 0.0;
    double province_evs = 0.0;
    double region_evcs = 0.0;
    double region_evs = 0.0;
};

/// Piecewise-constant registry lookup for the site's region; the rolling average
/// is filled in by the caller from the trend operator.
ServiceFeatures exog_features(Date date, const Registry& registry, std::string_view region);

/// Region code of a postal code: its first `prefix_len` characters.
std::string region_of(std::string_view postal_code, std::size_t prefix_len = 3);

struct EncodedFeature {
    std::string name;
    std::map<std::string, double> mapping;
    double default_value = 0.0;  // global training mean, used for unseen categories

    double encode(const std::string& category) const;
};

/// Smoothed target mean encoding over rows where train_mask is true:
/// (n_c mean_c + alpha global) / (n_c + alpha).
EncodedFeature mean_encode(std::string name, const std::vector<std::string>& categories,
                           const std::vector<double>& labels, const std::vector<bool>& train_mask,
                           double alpha = 10.0);

struct WeeklySeries {
    std::string site_id;
    std::vector<Date> week_starts;  // Mondays, contiguous
    std::vector<double> y;
    std::vector<std::string> exog_names;
    std::vector<std::vector<double>> exog;  // exog[column][week]

    std::size_t size() const noexcept { return y.size(); }
    /// First `n` weeks.
    WeeklySeries head(std::size_t n) const;
    /// Weeks [from, from + n).
    WeeklySeries slice(std::size_t from, std::size_t n) const;
};

using NamedColumn = std::pair<std::string, std::vector<double>>;

/// Sums daily requests per ISO week (Monday..Sunday) and averages each exogenous column.
/// Partial weeks at either end are dropped.
WeeklySeries weekly_aggregate(const gapfill::DailySeries& daily,
                              const std::vector<NamedColumn>& exog_daily = {});

/// week_start,y, exogenous columns in order, then encoded calendar columns in order.
void write_feature_matrix(std::ostream& out, const WeeklySeries& weekly,
                          const std::vector<NamedColumn>& encoded);

}  // namespace evqoe::features
