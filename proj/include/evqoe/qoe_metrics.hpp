#pragma once

#include <cstdint>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evqoe/core/time.hpp"
#include "evqoe/ingest.hpp"

namespace evqoe::qoe {

enum class DayCategory { Workday, Weekend, Holiday };
std::string_view to_string(DayCategory c);

using HolidayCalendar = std::set<Date>;

/// Holiday file: one ISO date per line; blank lines and '#' comments ignored.
HolidayCalendar parse_holidays(std::istream& in);
DayCategory categorize(Date d, const HolidayCalendar& holidays);

/// Exact fraction num/den, so complement and ordering checks involve no rounding.
struct Ratio {
    std::uint64_t num = 0;
    std::uint64_t den = 1;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    friend bool operator==(const Ratio& a, const Ratio& b) {
        return static_cast<unsigned __int128>(a.num) * b.den ==
               static_cast<unsigned __int128>(b.num) * a.den;
    }
    friend bool operator<=(const Ratio& a, const Ratio& b) {
        return static_cast<unsigned __int128>(a.num) * b.den <=
               static_cast<unsigned __int128>(b.num) * a.den;
    }
};

/// Single-pass slot counts from which every time-based metric follows.
struct SlotTally {
    std::uint64_t slots = 0;     // T
    int chargers = 1;            // n
    std::uint64_t busy_sum = 0;  // sum of k_i
    std::uint64_t occupied = 0;  // slots with k_i >= 1
    std::uint64_t full = 0;      // slots with k_i == n
};

SlotTally tally(std::span<const int> counts, int num_chargers);
SlotTally tally(const ingest::OccupancyTimeline& timeline);

/// U = (1/T) sum k_i / n
Ratio utilization(const ingest::OccupancyTimeline& timeline);
/// Omega: fraction of slots with at least one charger busy.
Ratio occupancy(const ingest::OccupancyTimeline& timeline);
/// P_I = 1 - Omega, i.e. the fraction of slots with every charger free.
Ratio idleness(const ingest::OccupancyTimeline& timeline);
/// P_B: fraction of slots with every charger busy.
Ratio blocking(const ingest::OccupancyTimeline& timeline);

Ratio utilization(const SlotTally& t);
Ratio occupancy(const SlotTally& t);
Ratio idleness(const SlotTally& t);
Ratio blocking(const SlotTally& t);

struct DelayRule {
    Seconds threshold = Minutes{5};
};

/// Number of sessions s with a predecessor p such that 0 < s.start - p.end <= threshold and
/// every charger was busy in the last slot p occupied. Sessions must belong to one site.
int delayed_evs(const std::vector<ingest::SessionRecord>& sessions,
                const ingest::OccupancyTimeline& timeline, const DelayRule& rule);

/// Sessions starting on `day`.
int count_requests(const std::vector<ingest::SessionRecord>& sessions, Date day);

struct DailyMetrics {
    std::string site_id;
    Date date;
    DayCategory category = DayCategory::Workday;
    int n_requests = 0;
    double utilization = 0.0;
    double occupancy = 0.0;
    double idleness = 0.0;
    double blocking = 0.0;
    int n_delayed = 0;
};

/// One row per calendar day in [first, last], each over its own 1440-slot timeline.
std::vector<DailyMetrics> daily_report(const ingest::Site& site,
                                       const std::vector<ingest::SessionRecord>& sessions,
                                       Date first, Date last, const HolidayCalendar& holidays,
                                       const DelayRule& rule = {});

void write_daily_metrics(std::ostream& out, const std::vector<DailyMetrics>& rows);
std::vector<DailyMetrics> parse_daily_metrics(std::istream& in);

enum class Metric { Utilization, Occupancy, Idleness, Blocking };
std::string_view to_string(Metric m);
double metric_value(const DailyMetrics& m, Metric metric);

struct Band {
    double lo = 0.0;
    double hi = 1.0;
    bool lo_closed = true;
    bool hi_closed = false;

    bool contains(double x) const;
    std::string label() const;
};

/// {[0,0.1), [0.1,0.3], (0.3,1]}
std::vector<Band> default_bands();
/// Throws ArgumentError unless the bands partition [0,1] without overlap or hole.
void validate_bands(const std::vector<Band>& bands);

struct ThresholdSummary {
    std::string site_id;
    int year = 0;
    Metric metric = Metric::Occupancy;
    Band band;
    int day_count = 0;
};

/// Per (site, year, band) day counts, ordered by site, year, then band.
std::vector<ThresholdSummary> threshold_summary(const std::vector<DailyMetrics>& daily,
                                                Metric metric, const std::vector<Band>& bands);

/// Wide layout: site_id,metric,year, then one day-count column per band.
void write_threshold_summary(std::ostream& out, const std::vector<ThresholdSummary>& rows,
                             const std::vector<Band>& bands);

struct FleetRatios {
    double evcr = 0.0;  // EVs per charger
    double evcp = 0.0;  // kW per EV
};

FleetRatios fleet_ratios(long long n_evs, long long n_chargers, double total_power_kw);

}  // namespace evqoe::qoe
