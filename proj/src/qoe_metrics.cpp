#include "evqoe/qoe_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "evqoe/core/csv.hpp"
#include "evqoe/core/errors.hpp"

namespace evqoe::qoe {

using ingest::OccupancyTimeline;
using ingest::SessionRecord;

std::string_view to_string(DayCategory c) {
    switch (c) {
        case DayCategory::Workday: return "Workday";
        case DayCategory::Weekend: return "Weekend";
        case DayCategory::Holiday: return "Holiday";
    }
    return "Workday";
}

HolidayCalendar parse_holidays(std::istream& in) {
    if (!in) throw IoError("holiday calendar not readable");
    HolidayCalendar out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        const auto first = line.find_first_not_of(' ');
        if (first == std::string::npos || line[first] == '#') continue;
        auto d = parse_date(std::string_view(line).substr(first));
        if (!d) throw SchemaError(fmt::format("holidays: line {}: not an ISO date", lineno));
        out.insert(*d);
    }
    return out;
}

DayCategory categorize(Date d, const HolidayCalendar& holidays) {
    if (holidays.contains(d)) return DayCategory::Holiday;
    return weekday_index(d) >= 5 ? DayCategory::Weekend : DayCategory::Workday;
}

SlotTally tally(std::span<const int> counts, int num_chargers) {
    if (counts.empty()) throw ArgumentError("metrics need a non-empty timeline (T = 0)");
    if (num_chargers < 1) throw ArgumentError("metrics need n >= 1");
    SlotTally t;
    t.slots = counts.size();
    t.chargers = num_chargers;
    for (int k : counts) {
        t.busy_sum += static_cast<std::uint64_t>(k);
        t.occupied += k >= 1 ? 1 : 0;
        t.full += k == num_chargers ? 1 : 0;
    }
    return t;
}

SlotTally tally(const OccupancyTimeline& timeline) {
    return tally(timeline.counts, timeline.num_chargers);
}

Ratio utilization(const SlotTally& t) {
    return {t.busy_sum, t.slots * static_cast<std::uint64_t>(t.chargers)};
}
Ratio occupancy(const SlotTally& t) { return {t.occupied, t.slots}; }
Ratio idleness(const SlotTally& t) { return {t.slots - t.occupied, t.slots}; }
Ratio blocking(const SlotTally& t) { return {t.full, t.slots}; }

Ratio utilization(const OccupancyTimeline& tl) { return utilization(tally(tl)); }
Ratio occupancy(const OccupancyTimeline& tl) { return occupancy(tally(tl)); }
Ratio idleness(const OccupancyTimeline& tl) { return idleness(tally(tl)); }
Ratio blocking(const OccupancyTimeline& tl) { return blocking(tally(tl)); }

namespace {

/// Per-session delayed flag, aligned with `sessions`.
std::vector<bool> delayed_flags(const std::vector<SessionRecord>& sessions,
                                const OccupancyTimeline& timeline, const DelayRule& rule) {
    const auto n = sessions.size();
    // Predecessor candidates ordered by end time, each with its blocked-at-end flag.
    std::vector<std::pair<Timestamp, bool>> ends;
    ends.reserve(n);
    const auto slots = static_cast<long long>(timeline.counts.size());
    for (const auto& p : sessions) {
        // Last slot the predecessor occupied, i.e. the slot containing the instant before p.end.
        const long long offset = (p.end_time - timeline.window_start).count();
        const long long idx = offset > 0 ? (offset + 59) / 60 - 1 : -1;
        const bool blocked = idx >= 0 && idx < slots &&
                             timeline.counts[static_cast<std::size_t>(idx)] == timeline.num_chargers;
        ends.emplace_back(p.end_time, blocked);
    }
    std::sort(ends.begin(), ends.end());

    std::vector<bool> flags(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        const Timestamp s = sessions[i].start_time;
        auto lo = std::lower_bound(ends.begin(), ends.end(),
                                   std::make_pair(s - rule.threshold, false));
        for (auto it = lo; it != ends.end() && it->first < s; ++it) {
            if (it->second) {
                flags[i] = true;
                break;
            }
        }
    }
    return flags;
}

}  // namespace

int delayed_evs(const std::vector<SessionRecord>& sessions, const OccupancyTimeline& timeline,
                const DelayRule& rule) {
    if (rule.threshold <= Seconds{0}) throw ArgumentError("delay threshold must be positive");
    const auto flags = delayed_flags(sessions, timeline, rule);
    return static_cast<int>(std::count(flags.begin(), flags.end(), true));
}

int count_requests(const std::vector<SessionRecord>& sessions, Date day) {
    return static_cast<int>(std::count_if(sessions.begin(), sessions.end(), [&](const auto& s) {
        return date_of(s.start_time) == day;
    }));
}

std::vector<DailyMetrics> daily_report(const ingest::Site& site,
                                       const std::vector<SessionRecord>& sessions, Date first,
                                       Date last, const HolidayCalendar& holidays,
                                       const DelayRule& rule) {
    std::vector<DailyMetrics> out;
    if (last < first) return out;
    if (rule.threshold <= Seconds{0}) throw ArgumentError("delay threshold must be positive");

    const Timestamp ws{first};
    const Timestamp we{last + std::chrono::days{1}};
    const auto timeline = ingest::build_occupancy_timeline(site, sessions, ws, we);
    const auto flags = delayed_flags(sessions, timeline, rule);

    const auto ndays = static_cast<std::size_t>((last - first).count() + 1);
    std::vector<int> requests(ndays, 0), delayed(ndays, 0);
    for (std::size_t i = 0; i < sessions.size(); ++i) {
        const auto day = (date_of(sessions[i].start_time) - first).count();
        if (day < 0 || day >= static_cast<long long>(ndays)) continue;
        ++requests[static_cast<std::size_t>(day)];
        if (flags[i]) ++delayed[static_cast<std::size_t>(day)];
    }

    constexpr std::size_t kSlotsPerDay = 1440;
    out.reserve(ndays);
    for (std::size_t d = 0; d < ndays; ++d) {
        const std::span<const int> slice(timeline.counts.data() + d * kSlotsPerDay, kSlotsPerDay);
        const auto t = tally(slice, site.num_chargers);
        DailyMetrics m;
        m.site_id = site.site_id;
        m.date = first + std::chrono::days{static_cast<long long>(d)};
        m.category = categorize(m.date, holidays);
        m.n_requests = requests[d];
        m.utilization = utilization(t).value();
        m.occupancy = occupancy(t).value();
        m.idleness = 1.0 - m.occupancy;
        m.blocking = blocking(t).value();
        m.n_delayed = delayed[d];
        out.push_back(std::move(m));
    }
    return out;
}

void write_daily_metrics(std::ostream& out, const std::vector<DailyMetrics>& rows) {
    csv::write_row(out, {"site_id", "date", "category", "n_requests", "utilization", "occupancy",
                         "idleness", "blocking", "n_delayed"});
    for (const auto& m : rows) {
        csv::write_row(out, {m.site_id, format_date(m.date), std::string(to_string(m.category)),
                             std::to_string(m.n_requests), csv::format_fixed(m.utilization, 6),
                             csv::format_fixed(m.occupancy, 6), csv::format_fixed(m.idleness, 6),
                             csv::format_fixed(m.blocking, 6), std::to_string(m.n_delayed)});
    }
}

std::vector<DailyMetrics> parse_daily_metrics(std::istream& in) {
    if (!in) throw IoError("daily metrics not readable");
    csv::Reader reader(in);
    auto header = reader.next();
    if (!header) throw SchemaError("daily metrics: empty file");
    const auto idx = csv::require_columns(
        *header,
        {"site_id", "date", "category", "n_requests", "utilization", "occupancy", "idleness",
         "blocking", "n_delayed"},
        "daily metrics");
    std::vector<DailyMetrics> rows;
    while (auto row = reader.next()) {
        auto bad = [&] {
            return SchemaError(fmt::format("daily metrics: malformed line {}", reader.line()));
        };
        if (row->size() != header->size()) throw bad();
        const auto& r = *row;
        DailyMetrics m;
        m.site_id = r[idx[0]];
        auto d = parse_date(r[idx[1]]);
        auto nr = csv::parse_int(r[idx[3]]);
        auto u = csv::parse_double(r[idx[4]]);
        auto o = csv::parse_double(r[idx[5]]);
        auto pi = csv::parse_double(r[idx[6]]);
        auto pb = csv::parse_double(r[idx[7]]);
        auto nd = csv::parse_int(r[idx[8]]);
        if (!d || !nr || !u || !o || !pi || !pb || !nd) throw bad();
        const auto& cat = r[idx[2]];
        if (cat == "Workday") m.category = DayCategory::Workday;
        else if (cat == "Weekend") m.category = DayCategory::Weekend;
        else if (cat == "Holiday") m.category = DayCategory::Holiday;
        else throw bad();
        m.date = *d;
        m.n_requests = static_cast<int>(*nr);
        m.utilization = *u;
        m.occupancy = *o;
        m.idleness = *pi;
        m.blocking = *pb;
        m.n_delayed = static_cast<int>(*nd);
        rows.push_back(std::move(m));
    }
    return rows;
}

std::string_view to_string(Metric m) {
    switch (m) {
        case Metric::Utilization: return "U";
        case Metric::Occupancy: return "Omega";
        case Metric::Idleness: return "P_I";
        case Metric::Blocking: return "P_B";
    }
    return "U";
}

double metric_value(const DailyMetrics& m, Metric metric) {
    switch (metric) {
        case Metric::Utilization: return m.utilization;
        case Metric::Occupancy: return m.occupancy;
        case Metric::Idleness: return m.idleness;
        case Metric::Blocking: return m.blocking;
    }
    return 0.0;
}

bool Band::contains(double x) const {
    const bool above = lo_closed ? x >= lo : x > lo;
    const bool below = hi_closed ? x <= hi : x < hi;
    return above && below;
}

std::string Band::label() const {
    auto pct = [](double v) { return csv::format_double(std::round(v * 1e6) / 1e4) + "%"; };
    return fmt::format("{}{}-{}{}", lo_closed ? '[' : '(', pct(lo), pct(hi), hi_closed ? ']' : ')');
}

std::vector<Band> default_bands() {
    return {{0.0, 0.1, true, false}, {0.1, 0.3, true, true}, {0.3, 1.0, false, true}};
}

void validate_bands(const std::vector<Band>& bands) {
    if (bands.empty()) throw ArgumentError("bands: empty partition");
    if (bands.front().lo != 0.0 || !bands.front().lo_closed) {
        throw ArgumentError("bands: partition must start with a closed 0 edge");
    }
    if (bands.back().hi != 1.0 || !bands.back().hi_closed) {
        throw ArgumentError("bands: partition must end with a closed 1 edge");
    }
    for (std::size_t i = 0; i < bands.size(); ++i) {
        const Band& b = bands[i];
        if (b.lo > b.hi || (b.lo == b.hi && !(b.lo_closed && b.hi_closed))) {
            throw ArgumentError(fmt::format("bands: band {} is empty or inverted", i));
        }
        if (i + 1 < bands.size()) {
            const Band& next = bands[i + 1];
            if (next.lo < b.hi || (next.lo == b.hi && b.hi_closed && next.lo_closed)) {
                throw ArgumentError(fmt::format("bands: bands {} and {} overlap", i, i + 1));
            }
            if (next.lo > b.hi || (!b.hi_closed && !next.lo_closed)) {
                throw ArgumentError(fmt::format("bands: gap between bands {} and {}", i, i + 1));
            }
        }
    }
}

std::vector<ThresholdSummary> threshold_summary(const std::vector<DailyMetrics>& daily,
                                                Metric metric, const std::vector<Band>& bands) {
    validate_bands(bands);
    std::map<std::pair<std::string, int>, std::vector<int>> counts;
    for (const auto& m : daily) {
        auto& row = counts[{m.site_id, year_of(m.date)}];
        row.resize(bands.size(), 0);
        const double v = std::clamp(metric_value(m, metric), 0.0, 1.0);
        for (std::size_t b = 0; b < bands.size(); ++b) {
            if (bands[b].contains(v)) {
                ++row[b];
                break;
            }
        }
    }
    std::vector<ThresholdSummary> out;
    for (const auto& [key, row] : counts) {
        for (std::size_t b = 0; b < bands.size(); ++b) {
            out.push_back({key.first, key.second, metric, bands[b], row[b]});
        }
    }
    return out;
}

void write_threshold_summary(std::ostream& out, const std::vector<ThresholdSummary>& rows,
                             const std::vector<Band>& bands) {
    csv::Row header{"site_id", "metric", "year"};
    for (const auto& b : bands) header.push_back("days " + b.label());
    csv::write_row(out, header);
    for (std::size_t i = 0; i + bands.size() <= rows.size(); i += bands.size()) {
        csv::Row row{rows[i].site_id, std::string(to_string(rows[i].metric)),
                     std::to_string(rows[i].year)};
        for (std::size_t b = 0; b < bands.size(); ++b) {
            row.push_back(std::to_string(rows[i + b].day_count));
        }
        csv::write_row(out, row);
    }
}

FleetRatios fleet_ratios(long long n_evs, long long n_chargers, double total_power_kw) {
    if (n_chargers <= 0) throw ArgumentError("EVCR undefined without chargers");
    if (n_evs <= 0) throw ArgumentError("EVCP undefined without EVs");
    if (total_power_kw < 0.0) throw ArgumentError("negative total power");
    return {static_cast<double>(n_evs) / static_cast<double>(n_chargers),
            total_power_kw / static_cast<double>(n_evs)};
}

}  // namespace evqoe::qoe
