#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "evqoe/core/errors.hpp"
#include "evqoe/core/stats.hpp"
#include "evqoe/ingest.hpp"
#include "evqoe/service_fit.hpp"
#include "evqoe/synth.hpp"

using namespace evqoe;
using namespace evqoe::synth;

namespace {

SynthConfig flat_config(int days = 365) {
    SynthConfig c;
    c.start = make_date(2019, 1, 1);
    c.end = c.start + std::chrono::days{days - 1};
    c.seed = 5;
    SiteConfig s;
    s.site_id = "F";
    s.postal_code = "H3A0A1";
    s.num_chargers = 6;
    s.base_rate = 40.0;
    s.annual_amplitude = 0.0;
    s.growth_per_year = 0.0;
    c.sites = {s};
    return c;
}

std::string csv_of(const SynthOutput& out) {
    std::ostringstream s;
    ingest::write_sessions(s, out.sessions);
    return s.str();
}

}  // namespace

TEST_CASE("flat demand has the configured daily mean") {
    const auto counts = daily_counts(flat_config(), 0);
    CHECK(counts.size() == 365);
    CHECK(std::abs(stats::mean(counts) - 40.0) / 40.0 < 0.03);
}

TEST_CASE("expected rate formula") {
    auto c = reference_config().normalized();
    const auto& s = c.sites[0];
    const Date d = make_date(2019, 4, 10);
    const double years = static_cast<double>((d - c.start).count()) / 365.25;
    const double expected = s.base_rate * (1 + s.growth_per_year * years) *
                            (1 + s.annual_amplitude * std::sin(2 * std::numbers::pi * day_of_year(d) / 365.0)) *
                            s.weekday_profile[static_cast<std::size_t>(weekday_index(d))];
    CHECK(expected_rate(s, c, d) == doctest::Approx(expected));
    CHECK(expected_rate(s, c, make_date(2020, 6, 1)) ==
          doctest::Approx(0.4 * expected_rate(s, SynthConfig{c.sites, c.start, c.end}, make_date(2020, 6, 1))));
    double sum = 0;
    for (double w : s.weekday_profile) sum += w;
    CHECK(sum == doctest::Approx(7.0));
}

TEST_CASE("gap days carry about 40 percent of the unsuppressed demand") {
    auto c = flat_config(730);
    c.gap = GapConfig{make_date(2019, 7, 1), make_date(2020, 6, 30), 0.6};
    const auto counts = daily_counts(c, 0);
    double in = 0, out = 0;
    int n_in = 0, n_out = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const Date d = c.start + std::chrono::days{static_cast<int>(i)};
        if (d >= c.gap->start && d <= c.gap->end) {
            in += counts[i];
            ++n_in;
        } else {
            out += counts[i];
            ++n_out;
        }
    }
    CHECK((in / n_in) / (out / n_out) == doctest::Approx(0.4).epsilon(0.05));
}

TEST_CASE("generation is deterministic in the seed") {
    auto c = flat_config(60);
    const auto a = generate_sessions(c), b = generate_sessions(c);
    CHECK(csv_of(a) == csv_of(b));
    c.seed = 6;
    CHECK(csv_of(generate_sessions(c)) != csv_of(a));
    std::ostringstream ta, tb;
    write_ground_truth(ta, a.truth);
    write_ground_truth(tb, b.truth);
    CHECK(ta.str() == tb.str());
}

TEST_CASE("sessions respect capacity, clamps and pricing") {
    auto c = reference_config();
    c.end = make_date(2018, 12, 31);
    const auto out = generate_sessions(c);
    const auto nc = c.normalized();
    std::map<std::string, const SiteConfig*> by_postal;
    for (const auto& s : nc.sites) by_postal[s.postal_code] = &s;
    for (const auto& r : out.sessions) {
        const auto dur = r.end_time - r.start_time;
        REQUIRE(dur >= Seconds{180});
        REQUIRE(dur <= Seconds{7200});
        const auto* s = by_postal.at(r.postal_code);
        REQUIRE(r.payment.has_value());
        CHECK(r.energy_kwh == doctest::Approx(static_cast<double>(dur.count()) / 3600.0 * s->power_kw).epsilon(1e-3));
        CHECK(*r.payment == doctest::Approx(r.energy_kwh * c.tariff_per_kwh).epsilon(0.05));
    }

    const auto cleaned = ingest::clean_sessions(out.sessions, {});
    CHECK(static_cast<double>(cleaned.rejected.size()) < 0.01 * static_cast<double>(out.sessions.size()));
    std::ostringstream m;
    write_manifest(m, c);
    std::istringstream mi(m.str());
    const auto manifest = ingest::parse_manifest(mi);
    const auto clustered = ingest::cluster_sites(cleaned.valid, &manifest);
    for (const auto& [postal, site] : clustered.sites) {
        std::vector<ingest::SessionRecord> own;
        for (const auto& r : cleaned.valid)
            if (r.postal_code == postal) own.push_back(r);
        const auto t = ingest::build_occupancy_timeline(site, own, Timestamp{c.start}, Timestamp{c.end} + Minutes{1440 + 180});
        CHECK(t.capped_slots == 0);
        CHECK(site.num_chargers == by_postal.at(postal)->num_chargers);
    }

    std::size_t arrivals = 0, dropped = 0;
    for (const auto& t : out.truth.sites) {
        arrivals += t.arrivals;
        dropped += t.dropped;
    }
    CHECK(arrivals == out.sessions.size() + dropped);
}

TEST_CASE("ground truth mirrors the configuration") {
    const auto c = reference_config();
    auto shorter = c;
    shorter.end = make_date(2018, 3, 31);
    const auto out = generate_sessions(shorter);
    REQUIRE(out.truth.sites.size() == 2);
    const auto& t = out.truth.sites[1];
    CHECK(t.site_id == "S02");
    CHECK(t.shape_k == 4);
    CHECK(t.service_rate == 0.1);
    CHECK(t.expected_daily.size() == 90);
    CHECK(t.expected_daily[10] == doctest::Approx(expected_rate(shorter.normalized().sites[1], shorter.normalized(),
                                                                 make_date(2018, 1, 11))));
}

TEST_CASE("service fit recovers the generating shape") {
    auto c = reference_config();
    c.end = make_date(2018, 12, 31);
    c.gap.reset();
    const auto out = generate_sessions(c);
    std::vector<double> minutes;
    for (const auto& r : out.sessions)
        if (r.postal_code == "G1R2B5") minutes.push_back(static_cast<double>((r.end_time - r.start_time).count()) / 60.0);
    REQUIRE(minutes.size() > 10000);
    CHECK(service::fit_erlang(minutes).shape_k == 4);
}

TEST_CASE("registry series") {
    auto c = flat_config(365 * 2);
    const auto reg = registry_series(c);
    CHECK(reg.lookup("region:H3A", "evs", make_date(2020, 1, 1)) == 1600);
    CHECK(reg.lookup("region:H3A", "evs", make_date(2019, 12, 31)) == 1550);
    CHECK(reg.lookup("region:H3A", "evcs", make_date(2020, 1, 15)) == 32);

    auto two = reference_config();
    const auto r2 = registry_series(two);
    for (const auto& [d, v] : r2.series("province", "evs")) {
        REQUIRE(v == r2.lookup("region:H2X", "evs", d) + r2.lookup("region:G1R", "evs", d));
    }
    two.registry_growth.evs_per_month = 0;
    const auto flat = registry_series(two);
    for (const auto& [d, v] : flat.series("region:H2X", "evs")) CHECK(v == 1000);
}

TEST_CASE("config validation") {
    auto c = flat_config();
    c.gap = GapConfig{c.start, c.end, 1.5};
    CHECK_THROWS_AS(c.validate(), ArgumentError);
    c = flat_config();
    c.sites[0].base_rate = 0;
    CHECK_THROWS_AS(c.validate(), ArgumentError);
    c = flat_config();
    c.sites[0].weekday_profile = {0, 0, 0, 0, 0, 0, 0};
    CHECK_THROWS_AS(c.validate(), ArgumentError);
    c = flat_config();
    c.sites.push_back(c.sites[0]);
    CHECK_THROWS_AS(c.validate(), ArgumentError);
    c = flat_config();
    c.sites[0].weekday_profile = {2, 1, 1, 1, 1, 1, 1};
    const auto n = c.normalized();
    CHECK(n.sites[0].weekday_profile[0] == doctest::Approx(14.0 / 8.0));
}
