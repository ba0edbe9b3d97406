#include "evqoe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <tuple>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "evqoe/core/csv.hpp"
#include "evqoe/core/errors.hpp"
#include "evqoe/core/rng.hpp"
#include "evqoe/service_fit.hpp"

namespace evqoe::synth {

namespace {

constexpr std::uint64_t kArrivalStream = 1;
constexpr std::uint64_t kSessionStream = 2;

std::size_t day_count(const SynthConfig& c) {
    return static_cast<std::size_t>((c.end - c.start).count()) + 1;
}

}  // namespace

void SynthConfig::validate() const {
    if (sites.empty()) throw ArgumentError("synth: no sites configured");
    if (end < start) throw ArgumentError("synth: end date precedes start date");
    if (gap) {
        if (gap->end < gap->start) throw ArgumentError("synth: gap end precedes gap start");
        if (!(gap->suppression >= 0.0 && gap->suppression <= 1.0)) {
            throw ArgumentError("synth: gap suppression must lie in [0, 1]");
        }
    }
    if (!(tariff_per_kwh > 0.0)) throw ArgumentError("synth: tariff must be positive");
    if (accounts_per_site < 1) throw ArgumentError("synth: accounts_per_site must be positive");
    if (!(max_delay_hours >= 0.0)) throw ArgumentError("synth: max_delay_hours must be non-negative");
    std::set<std::string> ids;
    for (const auto& s : sites) {
        if (s.site_id.empty() || s.postal_code.empty()) throw ArgumentError("synth: site needs an id and postal code");
        if (!ids.insert(s.site_id).second) throw ArgumentError("synth: duplicate site id " + s.site_id);
        if (s.num_chargers < 1) throw ArgumentError("synth: num_chargers must be positive");
        if (!(s.base_rate > 0.0)) throw ArgumentError("synth: base_rate must be positive");
        if (!(s.service_rate > 0.0) || s.shape_k < 1) throw ArgumentError("synth: invalid service law");
        if (!(s.power_kw > 0.0)) throw ArgumentError("synth: power_kw must be positive");
        if (!(std::abs(s.annual_amplitude) < 1.0)) throw ArgumentError("synth: annual_amplitude must lie in (-1, 1)");
        if (s.growth_per_year <= -1.0) throw ArgumentError("synth: growth_per_year must exceed -1");
        double sum = 0.0;
        for (double w : s.weekday_profile) {
            if (w < 0.0) throw ArgumentError("synth: weekday weights must be non-negative");
            sum += w;
        }
        if (!(sum > 0.0)) throw ArgumentError("synth: weekday weights must not all be zero");
    }
}

SynthConfig SynthConfig::normalized() const {
    validate();
    SynthConfig c = *this;
    for (auto& s : c.sites) {
        double sum = 0.0;
        for (double w : s.weekday_profile) sum += w;
        for (double& w : s.weekday_profile) w *= 7.0 / sum;
    }
    return c;
}

SynthConfig reference_config() {
    SynthConfig c;
    c.start = make_date(2018, 1, 1);
    c.end = make_date(2022, 12, 31);
    c.gap = GapConfig{make_date(2020, 1, 1), make_date(2021, 6, 30), 0.6};
    c.seed = 20180101;

    SiteConfig a;
    a.site_id = "S01";
    a.postal_code = "H2X1Y4";
    a.num_chargers = 2;
    a.base_rate = 14.0;
    a.weekday_profile = {0.9, 0.95, 1.0, 1.0, 1.1, 1.1, 0.95};
    a.annual_amplitude = 0.25;
    a.growth_per_year = 0.12;
    a.shape_k = 2;
    a.service_rate = 0.05;

    SiteConfig b;
    b.site_id = "S02";
    b.postal_code = "G1R2B5";
    b.num_chargers = 4;
    b.base_rate = 30.0;
    b.weekday_profile = {1.1, 1.1, 1.05, 1.05, 1.0, 0.85, 0.85};
    b.annual_amplitude = 0.35;
    b.growth_per_year = 0.08;
    b.shape_k = 4;
    b.service_rate = 0.1;
    b.power_kw = 50.0;

    c.sites = {a, b};
    return c;
}

double expected_rate(const SiteConfig& s, const SynthConfig& c, Date d) {
    const double years = static_cast<double>((d - c.start).count()) / 365.25;
    const double season = 1.0 + s.annual_amplitude * std::sin(2.0 * std::numbers::pi * day_of_year(d) / 365.0);
    double lam = s.base_rate * (1.0 + s.growth_per_year * years) * season * s.weekday_profile[weekday_index(d)];
    if (c.gap && d >= c.gap->start && d <= c.gap->end) lam *= 1.0 - c.gap->suppression;
    return std::max(0.0, lam);
}

std::vector<double> daily_counts(const SynthConfig& config, std::size_t site_index) {
    const auto c = config.normalized();
    if (site_index >= c.sites.size()) throw ArgumentError("daily_counts: site index out of range");
    Rng rng = Rng::derived(derive_seed(c.seed, site_index), kArrivalStream);
    std::vector<double> out;
    const std::size_t days = day_count(c);
    for (std::size_t i = 0; i < days; ++i) {
        const Date d = c.start + std::chrono::days{static_cast<int>(i)};
        out.push_back(static_cast<double>(rng.poisson(expected_rate(c.sites[site_index], c, d))));
    }
    return out;
}

SynthOutput generate_sessions(const SynthConfig& config) {
    const auto c = config.normalized();
    SynthOutput out;
    out.truth.start = c.start;
    out.truth.end = c.end;
    out.truth.seed = c.seed;
    out.truth.registry = registry_series(c);
    const std::size_t days = day_count(c);
    const auto max_delay = Seconds{static_cast<long long>(std::llround(c.max_delay_hours * 3600.0))};

    for (std::size_t si = 0; si < c.sites.size(); ++si) {
        const auto& site = c.sites[si];
        const auto counts = daily_counts(c, si);
        Rng rng = Rng::derived(derive_seed(c.seed, si), kSessionStream);
        SiteTruth truth;
        truth.site_id = site.site_id;
        truth.shape_k = site.shape_k;
        truth.service_rate = site.service_rate;

        // Arrival instants, then durations and accounts in arrival order.
        std::vector<Timestamp> arrivals;
        for (std::size_t i = 0; i < days; ++i) {
            const Date d = c.start + std::chrono::days{static_cast<int>(i)};
            truth.expected_daily.push_back(expected_rate(site, c, d));
            auto no_gap = c;
            no_gap.gap.reset();
            truth.unsuppressed_daily.push_back(expected_rate(site, no_gap, d));
            const auto n = static_cast<std::size_t>(counts[i]);
            const std::size_t first = arrivals.size();
            for (std::size_t k = 0; k < n; ++k) {
                arrivals.push_back(Timestamp{d} + Seconds{static_cast<long long>(rng.index(86400))});
            }
            std::sort(arrivals.begin() + static_cast<std::ptrdiff_t>(first), arrivals.end());
        }
        truth.arrivals = arrivals.size();

        std::vector<Timestamp> free_at(static_cast<std::size_t>(site.num_chargers), Timestamp{c.start} - Seconds{1});
        std::size_t seq = 0;
        for (const Timestamp arrival : arrivals) {
            const double minutes = std::clamp(service::sample_service(site.shape_k, site.service_rate, rng), 3.0, 120.0);
            const auto duration = Seconds{std::clamp<long long>(std::llround(minutes * 60.0), 180, 7200)};
            const std::size_t account = rng.index(static_cast<std::size_t>(c.accounts_per_site));

            std::size_t outlet = 0;
            bool found = false;
            for (std::size_t o = 0; o < free_at.size(); ++o) {
                if (free_at[o] <= arrival) {
                    outlet = o;
                    found = true;
                    break;
                }
            }
            Timestamp start = arrival;
            if (!found) {
                outlet = static_cast<std::size_t>(std::min_element(free_at.begin(), free_at.end()) - free_at.begin());
                start = free_at[outlet];
                if (start - arrival > max_delay) {
                    ++truth.dropped;
                    continue;
                }
            }
            const Timestamp end = start + duration;
            // Next session on this outlet starts on a fresh minute slot.
            const auto since_epoch = end.time_since_epoch().count();
            free_at[outlet] = Timestamp{Seconds{(since_epoch + 59) / 60 * 60}};

            ingest::SessionRecord r;
            r.session_id = fmt::format("{}-{:07d}", site.site_id, ++seq);
            r.outlet_id = fmt::format("{}-O{}", site.site_id, outlet + 1);
            r.station_id = fmt::format("{}-ST{}", site.site_id, outlet / 2 + 1);
            r.postal_code = site.postal_code;
            r.start_time = start;
            r.end_time = end;
            const double hours = static_cast<double>(duration.count()) / 3600.0;
            r.energy_kwh = std::round(hours * site.power_kw * 1000.0) / 1000.0;
            r.payment = std::round(r.energy_kwh * c.tariff_per_kwh * 100.0) / 100.0;
            if (*r.payment <= 0.0) r.payment = 0.01;
            r.account_id = fmt::format("{}-A{:04d}", site.site_id, account + 1);
            out.sessions.push_back(std::move(r));
        }
        if (truth.dropped > 0) {
            spdlog::info("synth: site {} dropped {} of {} arrivals after waiting more than {} h", site.site_id,
                         truth.dropped, truth.arrivals, c.max_delay_hours);
        }
        out.truth.sites.push_back(std::move(truth));
    }
    std::sort(out.sessions.begin(), out.sessions.end(), [](const auto& a, const auto& b) {
        return std::tie(a.postal_code, a.start_time, a.session_id) < std::tie(b.postal_code, b.start_time, b.session_id);
    });
    return out;
}

features::Registry registry_series(const SynthConfig& c) {
    features::Registry reg;
    std::set<std::string> regions;
    for (const auto& s : c.sites) regions.insert(features::region_of(s.postal_code));
    const auto& g = c.registry_growth;
    const int y0 = year_of(c.start), m0 = month_of(c.start);
    const int months = (year_of(c.end) - y0) * 12 + (month_of(c.end) - m0);
    for (int m = 0; m <= months; ++m) {
        const int idx = (m0 - 1) + m;
        const Date d = make_date(y0 + idx / 12, idx % 12 + 1, 1);
        const double evs = g.initial_evs + g.evs_per_month * m;
        const double evcs = g.initial_evcs + g.evcs_per_month * m;
        for (const auto& r : regions) {
            reg.add("region:" + r, "evs", d, evs);
            reg.add("region:" + r, "evcs", d, evcs);
        }
        reg.add("province", "evs", d, evs * static_cast<double>(regions.size()));
        reg.add("province", "evcs", d, evcs * static_cast<double>(regions.size()));
    }
    return reg;
}

void write_manifest(std::ostream& out, const SynthConfig& c) {
    csv::write_row(out, {"postal_code", "num_chargers", "levels"});
    for (const auto& s : c.sites) {
        const std::string level = s.power_kw >= 25.0 ? "L3" : "L2";
        std::string levels;
        for (int i = 0; i < s.num_chargers; ++i) levels += (i ? ";" : "") + level;
        csv::write_row(out, {s.postal_code, std::to_string(s.num_chargers), levels});
    }
}

void write_ground_truth(std::ostream& out, const GroundTruth& t) {
    nlohmann::ordered_json j;
    j["start"] = format_date(t.start);
    j["end"] = format_date(t.end);
    j["seed"] = t.seed;
    auto& sites = j["sites"] = nlohmann::ordered_json::array();
    for (const auto& s : t.sites) {
        nlohmann::ordered_json js;
        js["site_id"] = s.site_id;
        js["service"] = {{"shape_k", s.shape_k}, {"rate", s.service_rate}};
        js["arrivals"] = s.arrivals;
        js["dropped"] = s.dropped;
        js["expected_daily"] = s.expected_daily;
        js["unsuppressed_daily"] = s.unsuppressed_daily;
        sites.push_back(std::move(js));
    }
    auto& reg = j["registry"] = nlohmann::ordered_json::array();
    for (const auto& [scope, metric] : t.registry.keys()) {
        for (const auto& [d, v] : t.registry.series(scope, metric)) {
            reg.push_back({{"date", format_date(d)}, {"scope", scope}, {"metric", metric}, {"value", v}});
        }
    }
    out << j.dump(2) << '\n';
}

}  // namespace evqoe::synth
