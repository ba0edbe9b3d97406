#include "evqoe/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "evqoe/core/csv.hpp"
#include "evqoe/core/errors.hpp"

namespace evqoe::features {

TimestampFeatures calendar_features(Date date, const qoe::HolidayCalendar& holidays) {
    TimestampFeatures f;
    f.weekday = weekday_index(date);
    f.day_of_month = static_cast<int>(day_of_month(date));
    f.day_of_year = std::min(day_of_year(date), 365);
    f.month = static_cast<int>(month_of(date));
    f.week_of_year = std::clamp(iso_week(date), 1, 53);
    f.week_of_month = std::min(4, (f.day_of_month + 6) / 7);
    f.quarter = (f.month - 1) / 3 + 1;
    f.year = year_of(date);
    f.working_day = (f.weekday >= 5 || holidays.contains(date)) ? 0 : 1;
    return f;
}

void Registry::add(std::string scope, std::string metric, Date date, double value) {
    auto& s = series_[{std::move(scope), std::move(metric)}];
    auto it = std::lower_bound(s.begin(), s.end(), date,
                               [](const auto& e, Date d) { return e.first < d; });
    if (it != s.end() && it->first == date) {
        it->second = value;
    } else {
        s.insert(it, {date, value});
    }
}

bool Registry::has(std::string_view scope, std::string_view metric) const {
    return series_.find(std::make_pair(std::string(scope), std::string(metric))) != series_.end();
}

const std::vector<std::pair<Date, double>>& Registry::series(std::string_view scope,
                                                             std::string_view metric) const {
    auto it = series_.find(std::make_pair(std::string(scope), std::string(metric)));
    if (it == series_.end()) {
        throw MissingExogData(fmt::format("registry has no series {}/{}", scope, metric));
    }
    return it->second;
}

double Registry::lookup(std::string_view scope, std::string_view metric, Date date) const {
    const auto& s = series(scope, metric);
    auto it = std::upper_bound(s.begin(), s.end(), date,
                               [](Date d, const auto& e) { return d < e.first; });
    if (it == s.begin()) {
        throw MissingExogData(fmt::format("registry {}/{} has no value at or before {}", scope,
                                          metric, format_date(date)));
    }
    return std::prev(it)->second;
}

std::vector<std::pair<std::string, std::string>> Registry::keys() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [k, v] : series_) out.push_back(k);
    return out;
}

Registry parse_registry(std::istream& in) {
    if (!in) throw IoError("registry not readable");
    csv::Reader reader(in);
    auto header = reader.next();
    if (!header) throw SchemaError("registry: empty file");
    const auto idx = csv::require_columns(*header, {"date", "scope", "metric", "value"}, "registry");
    Registry reg;
    while (auto row = reader.next()) {
        auto bad = [&](std::string_view why) {
            return SchemaError(fmt::format("registry: line {}: {}", reader.line(), why));
        };
        if (row->size() != header->size()) throw bad("wrong field count");
        const auto d = parse_date((*row)[idx[0]]);
        const auto& scope = (*row)[idx[1]];
        const auto& metric = (*row)[idx[2]];
        const auto v = csv::parse_double((*row)[idx[3]]);
        if (!d) throw bad("bad date");
        if (scope != "province" && scope.rfind("region:", 0) != 0) throw bad("bad scope");
        if (metric != "evs" && metric != "evcs") throw bad("bad metric");
        if (!v || *v < 0.0) throw bad("value must be a non-negative number");
        reg.add(scope, metric, *d, *v);
    }
    for (const auto& [scope, metric] : reg.keys()) {
        const auto& s = reg.series(scope, metric);
        for (std::size_t i = 1; i < s.size(); ++i) {
            if (s[i].second < s[i - 1].second) {
                spdlog::warn("registry {}/{} decreases at {}", scope, metric, format_date(s[i].first));
            }
        }
    }
    return reg;
}

void write_registry(std::ostream& out, const Registry& registry) {
    csv::write_row(out, {"date", "scope", "metric", "value"});
    // Date-major order reads naturally as a monthly table.
    std::vector<std::tuple<Date, std::string, std::string, double>> rows;
    for (const auto& [scope, metric] : registry.keys()) {
        for (const auto& [d, v] : registry.series(scope, metric)) rows.emplace_back(d, scope, metric, v);
    }
    std::sort(rows.begin(), rows.end());
    for (const auto& [d, scope, metric, v] : rows) {
        csv::write_row(out, {format_date(d), scope, metric, csv::format_double(v)});
    }
}

ServiceFeatures exog_features(Date date, const Registry& registry, std::string_view region) {
    const std::string scope = "region:" + std::string(region);
    ServiceFeatures f;
    f.province_evcs = registry.lookup("province", "evcs", date);
    f.province_evs = registry.lookup("province", "evs", date);
    f.region_evcs = registry.lookup(scope, "evcs", date);
    f.region_evs = registry.lookup(scope, "evs", date);
    return f;
}

std::string region_of(std::string_view postal_code, std::size_t prefix_len) {
    std::string out;
    for (char c : postal_code) {
        if (c == ' ') continue;
        out.push_back(c);
        if (out.size() == prefix_len) break;
    }
    return out;
}

double EncodedFeature::encode(const std::string& category) const {
    auto it = mapping.find(category);
    return it == mapping.end() ? default_value : it->second;
}

EncodedFeature mean_encode(std::string name, const std::vector<std::string>& categories,
                           const std::vector<double>& labels, const std::vector<bool>& train_mask,
                           double alpha) {
    if (categories.size() != labels.size() || labels.size() != train_mask.size()) {
        throw ArgumentError("mean_encode: column lengths differ");
    }
    if (alpha < 0.0) throw ArgumentError("mean_encode: negative smoothing");
    std::map<std::string, std::pair<double, long long>> groups;
    double total = 0.0;
    long long n = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!train_mask[i]) continue;
        auto& g = groups[categories[i]];
        g.first += labels[i];
        ++g.second;
        total += labels[i];
        ++n;
    }
    if (n == 0) throw ArgumentError("mean_encode: empty training set");
    EncodedFeature enc;
    enc.name = std::move(name);
    enc.default_value = total / static_cast<double>(n);
    for (const auto& [cat, g] : groups) {
        const double nc = static_cast<double>(g.second);
        enc.mapping[cat] = (g.first + alpha * enc.default_value) / (nc + alpha);
    }
    return enc;
}

WeeklySeries WeeklySeries::head(std::size_t n) const { return slice(0, n); }

WeeklySeries WeeklySeries::slice(std::size_t from, std::size_t n) const {
    if (from + n > size()) throw ArgumentError("weekly slice out of range");
    WeeklySeries out;
    out.site_id = site_id;
    out.exog_names = exog_names;
    const auto b = static_cast<std::ptrdiff_t>(from);
    const auto e = static_cast<std::ptrdiff_t>(from + n);
    out.week_starts.assign(week_starts.begin() + b, week_starts.begin() + e);
    out.y.assign(y.begin() + b, y.begin() + e);
    for (const auto& col : exog) out.exog.emplace_back(col.begin() + b, col.begin() + e);
    return out;
}

WeeklySeries weekly_aggregate(const gapfill::DailySeries& daily,
                              const std::vector<NamedColumn>& exog_daily) {
    for (const auto& [name, col] : exog_daily) {
        if (col.size() != daily.values.size()) {
            throw ArgumentError(fmt::format("weekly_aggregate: column '{}' length differs", name));
        }
    }
    const std::size_t offset = static_cast<std::size_t>((7 - weekday_index(daily.start_date)) % 7);
    if (offset + 7 > daily.values.size()) {
        throw ArgumentError("weekly_aggregate: series shorter than one full week");
    }
    WeeklySeries w;
    w.site_id = daily.site_id;
    for (const auto& [name, col] : exog_daily) w.exog_names.push_back(name);
    w.exog.resize(exog_daily.size());
    for (std::size_t start = offset; start + 7 <= daily.values.size(); start += 7) {
        w.week_starts.push_back(daily.start_date + std::chrono::days{static_cast<long long>(start)});
        double total = 0.0;
        for (std::size_t d = 0; d < 7; ++d) total += daily.values[start + d];
        w.y.push_back(total);
        for (std::size_t c = 0; c < exog_daily.size(); ++c) {
            double s = 0.0;
            for (std::size_t d = 0; d < 7; ++d) s += exog_daily[c].second[start + d];
            w.exog[c].push_back(s / 7.0);
        }
    }
    return w;
}

void write_feature_matrix(std::ostream& out, const WeeklySeries& weekly,
                          const std::vector<NamedColumn>& encoded) {
    csv::Row header{"week_start", "y"};
    for (const auto& n : weekly.exog_names) header.push_back(n);
    for (const auto& [n, col] : encoded) header.push_back(n);
    csv::write_row(out, header);
    for (std::size_t i = 0; i < weekly.size(); ++i) {
        csv::Row row{format_date(weekly.week_starts[i]), csv::format_double(weekly.y[i])};
        for (const auto& col : weekly.exog) row.push_back(csv::format_double(col[i]));
        for (const auto& [n, col] : encoded) row.push_back(csv::format_double(col[i]));
        csv::write_row(out, row);
    }
}

}  // namespace evqoe::features
