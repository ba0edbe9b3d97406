#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "evqoe/core/errors.hpp"
#include "evqoe/core/rng.hpp"
#include "evqoe/ingest.hpp"
#include "evqoe/synth.hpp"

using namespace evqoe;
using namespace evqoe::ingest;

namespace {

Timestamp ts(const char* s) { return *parse_timestamp(s); }

SessionRecord rec(std::string id, const char* start, const char* end, std::string account = "A1",
                  std::string postal = "H2X1Y4", std::string outlet = "O1") {
    SessionRecord r;
    r.session_id = std::move(id);
    r.outlet_id = std::move(outlet);
    r.station_id = "ST1";
    r.postal_code = std::move(postal);
    r.start_time = ts(start);
    r.end_time = ts(end);
    r.energy_kwh = 5.0;
    r.payment = 2.0;
    r.account_id = std::move(account);
    return r;
}

const char* kHeader = "session_id,outlet_id,station_id,postal_code,start_time,end_time,energy_kwh,payment,account_id\n";

// Brute force: slot i counts a session iff the open intervals overlap.
std::vector<int> brute_counts(const std::vector<SessionRecord>& ss, Timestamp w0, std::size_t T, int n) {
    std::vector<int> k(T, 0);
    for (std::size_t i = 0; i < T; ++i) {
        const Timestamp a = w0 + Minutes{static_cast<long long>(i)};
        const Timestamp b = a + Minutes{1};
        int c = 0;
        for (const auto& s : ss) {
            if (s.start_time < b && s.end_time > a) ++c;
        }
        k[i] = std::min(c, n);
    }
    return k;
}

}  // namespace

TEST_CASE("parse_sessions keeps well-formed rows in order") {
    std::istringstream in(std::string(kHeader) +
                          "s1,O1,ST1,H2X1Y4,2019-05-01T10:00:00Z,2019-05-01T10:30:00Z,5.5,2.10,A1\n"
                          "s2,O2,ST1,H2X1Y4,2019-05-01T11:00:00Z,2019-05-01T11:40:00Z,7,3,A2\n"
                          "s3,O1,ST1,H2X1Y4,2019-05-01T12:00:00Z,2019-05-01T12:05:00Z,1.25,,A3\n");
    const auto r = parse_sessions(in);
    REQUIRE(r.records.size() == 3);
    CHECK(r.rejected.empty());
    CHECK(r.records[0].session_id == "s1");
    CHECK(r.records[2].session_id == "s3");
    CHECK_FALSE(r.records[2].payment.has_value());
    CHECK(r.records[0].energy_kwh == doctest::Approx(5.5));
}

TEST_CASE("non-numeric energy is a Malformed rejection") {
    std::istringstream in(std::string(kHeader) +
                          "s1,O1,ST1,H2X1Y4,2019-05-01T10:00:00Z,2019-05-01T10:30:00Z,abc,2,A1\n");
    const auto r = parse_sessions(in);
    CHECK(r.records.empty());
    REQUIRE(r.rejected.size() == 1);
    CHECK(r.rejected[0].reason == RejectReason::Malformed);
}

TEST_CASE("missing header column is a schema error naming it") {
    std::istringstream in("session_id,outlet_id,station_id,postal_code,start_time,end_time,payment,account_id\n");
    try {
        (void)parse_sessions(in);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("energy_kwh") != std::string::npos);
    }
}

TEST_CASE("synthetic sessions round-trip through write and parse") {
    auto cfg = synth::reference_config();
    cfg.end = make_date(2018, 12, 31);
    cfg.gap.reset();
    auto out = synth::generate_sessions(cfg);
    out.sessions.resize(10000);
    std::ostringstream first;
    write_sessions(first, out.sessions);
    std::istringstream in(first.str());
    const auto parsed = parse_sessions(in);
    CHECK(parsed.rejected.empty());
    REQUIRE(parsed.records.size() == 10000);
    CHECK(parsed.records == out.sessions);
    std::ostringstream second;
    write_sessions(second, parsed.records);
    CHECK(second.str() == first.str());
}

TEST_CASE("cleaning rules and reason order") {
    CleaningRules rules;
    std::vector<SessionRecord> in{
        rec("short", "2019-01-01T10:00:00Z", "2019-01-01T10:02:00Z"),
        rec("exact3", "2019-01-01T10:00:00Z", "2019-01-01T10:03:00Z"),
        rec("long", "2019-01-01T10:00:00Z", "2019-01-01T12:10:00Z"),
        rec("exact120", "2019-01-01T10:00:00Z", "2019-01-01T12:00:00Z"),
        rec("neg", "2019-01-01T10:00:00Z", "2019-01-01T09:00:00Z"),
    };
    auto nopay = rec("nopay", "2019-01-01T10:00:00Z", "2019-01-01T10:30:00Z");
    nopay.payment.reset();
    auto zero_pay = rec("zeropay", "2019-01-01T10:00:00Z", "2019-01-01T10:30:00Z");
    zero_pay.payment = 0.0;
    auto noenergy = rec("noenergy", "2019-01-01T10:00:00Z", "2019-01-01T10:30:00Z");
    noenergy.energy_kwh = 0.0;
    auto both = rec("both", "2019-01-01T10:00:00Z", "2019-01-01T10:01:00Z");
    both.energy_kwh = 0.0;
    both.payment.reset();
    in.insert(in.end(), {nopay, zero_pay, noenergy, both});

    const auto r = clean_sessions(in, rules);
    std::map<std::string, RejectReason> reasons;
    for (const auto& x : r.rejected) reasons[x.record.session_id] = x.reason;
    std::set<std::string> valid;
    for (const auto& x : r.valid) valid.insert(x.session_id);

    CHECK(valid == std::set<std::string>{"exact3", "exact120"});
    CHECK(reasons.at("short") == RejectReason::TooShort);
    CHECK(reasons.at("long") == RejectReason::TooLong);
    CHECK(reasons.at("neg") == RejectReason::NegativeDuration);
    CHECK(reasons.at("nopay") == RejectReason::NoPayment);
    CHECK(reasons.at("zeropay") == RejectReason::NoPayment);
    CHECK(reasons.at("noenergy") == RejectReason::NoEnergy);
    CHECK(reasons.at("both") == RejectReason::TooShort);
    CHECK(r.valid.size() + r.rejected.size() == in.size());
}

TEST_CASE("cleaning rule validation") {
    CleaningRules r;
    r.min_duration = Minutes{200};
    CHECK_THROWS_AS(r.validate(), ArgumentError);
    CleaningRules g;
    g.merge_gap = Minutes{5};
    CHECK_THROWS_AS(g.validate(), ArgumentError);
}

TEST_CASE("merging resumed sessions") {
    CleaningRules rules;
    SUBCASE("30 s gap merges and sums energy and payment") {
        auto a = rec("a", "2019-01-01T10:00:00Z", "2019-01-01T10:20:00Z");
        auto b = rec("b", "2019-01-01T10:20:30Z", "2019-01-01T10:40:00Z");
        b.energy_kwh = 3.0;
        b.payment = 1.5;
        const auto m = merge_resumed_sessions({a, b}, rules);
        REQUIRE(m.size() == 1);
        CHECK(m[0].start_time == a.start_time);
        CHECK(m[0].end_time == b.end_time);
        CHECK(m[0].energy_kwh == doctest::Approx(8.0));
        CHECK(*m[0].payment == doctest::Approx(3.5));
    }
    SUBCASE("10 min gap stays split") {
        const auto m = merge_resumed_sessions({rec("a", "2019-01-01T10:00:00Z", "2019-01-01T10:20:00Z"),
                                               rec("b", "2019-01-01T10:30:00Z", "2019-01-01T10:40:00Z")},
                                              rules);
        CHECK(m.size() == 2);
    }
    SUBCASE("chain with 20 s gaps becomes one record") {
        const auto m = merge_resumed_sessions({rec("c", "2019-01-01T10:40:40Z", "2019-01-01T11:00:00Z"),
                                               rec("a", "2019-01-01T10:00:00Z", "2019-01-01T10:20:00Z"),
                                               rec("b", "2019-01-01T10:20:20Z", "2019-01-01T10:40:20Z")},
                                              rules);
        REQUIRE(m.size() == 1);
        CHECK(m[0].start_time == ts("2019-01-01T10:00:00Z"));
        CHECK(m[0].end_time == ts("2019-01-01T11:00:00Z"));
        CHECK(m[0].energy_kwh == doctest::Approx(15.0));
    }
    SUBCASE("different accounts or sites never merge") {
        const auto m = merge_resumed_sessions({rec("a", "2019-01-01T10:00:00Z", "2019-01-01T10:20:00Z", "A1"),
                                               rec("b", "2019-01-01T10:20:10Z", "2019-01-01T10:40:00Z", "A2"),
                                               rec("c", "2019-01-01T10:40:10Z", "2019-01-01T10:50:00Z", "A2", "G1R2B5")},
                                              rules);
        CHECK(m.size() == 3);
    }
    SUBCASE("empty account ids are not merged") {
        const auto m = merge_resumed_sessions({rec("a", "2019-01-01T10:00:00Z", "2019-01-01T10:20:00Z", ""),
                                               rec("b", "2019-01-01T10:20:10Z", "2019-01-01T10:40:00Z", "")},
                                              rules);
        CHECK(m.size() == 2);
    }
}

TEST_CASE("merge is idempotent and conserves records on random input") {
    CleaningRules rules;
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<SessionRecord> in;
        Timestamp t = ts("2019-03-01T00:00:00Z");
        for (int i = 0; i < 200; ++i) {
            t += Seconds{static_cast<long long>(rng.index(400))};
            const auto dur = Seconds{180 + static_cast<long long>(rng.index(3000))};
            SessionRecord r = rec("s" + std::to_string(i), "2019-01-01T00:00:00Z", "2019-01-01T00:03:00Z",
                                  "A" + std::to_string(rng.index(4)), rng.index(2) ? "H2X1Y4" : "G1R2B5");
            r.start_time = t;
            r.end_time = t + dur;
            in.push_back(r);
        }
        const auto once = merge_resumed_sessions(in, rules);
        const auto twice = merge_resumed_sessions(once, rules);
        CHECK(once == twice);
        double e_in = 0.0, e_out = 0.0;
        for (const auto& r : in) e_in += r.energy_kwh;
        for (const auto& r : once) e_out += r.energy_kwh;
        CHECK(e_out == doctest::Approx(e_in));
        CHECK(once.size() <= in.size());
    }
}

TEST_CASE("cluster_sites groups by postal code") {
    std::vector<SessionRecord> rs;
    for (int i = 0; i < 3; ++i) {
        rs.push_back(rec("a" + std::to_string(i), "2019-01-01T10:00:00Z", "2019-01-01T10:20:00Z", "A", "H2X1Y4",
                         "OA" + std::to_string(i)));
        rs.push_back(rec("b" + std::to_string(i), "2019-01-01T10:00:00Z", "2019-01-01T10:20:00Z", "A", "G1R2B5",
                         "OB" + std::to_string(i)));
    }
    SUBCASE("outlet count") {
        const auto c = cluster_sites(rs);
        REQUIRE(c.sites.size() == 2);
        CHECK(c.sites.at("H2X1Y4").num_chargers == 3);
        CHECK(c.sites.at("G1R2B5").num_chargers == 3);
        CHECK(c.sites.at("H2X1Y4").site_id == "H2X1Y4");
    }
    SUBCASE("manifest wins") {
        std::istringstream m("postal_code,num_chargers,levels\nH2X1Y4,4,L2;L2;L3;L3\n");
        const auto manifest = parse_manifest(m);
        std::vector<SessionRecord> two(rs.begin(), rs.begin() + 3);
        const auto c = cluster_sites(two, &manifest);
        CHECK(c.sites.at("H2X1Y4").num_chargers == 4);
    }
    SUBCASE("singleton") {
        const auto c = cluster_sites({rs[0]});
        REQUIRE(c.sites.size() == 1);
        CHECK(c.sites.begin()->second.num_chargers == 1);
    }
    SUBCASE("empty postal code is malformed") {
        auto bad = rs[0];
        bad.postal_code.clear();
        const auto c = cluster_sites({bad, rs[1]});
        CHECK(c.sites.size() == 1);
        REQUIRE(c.rejected.size() == 1);
        CHECK(c.rejected[0].reason == RejectReason::Malformed);
    }
}

TEST_CASE("occupancy timeline rasterization") {
    Site site;
    site.site_id = "H2X1Y4";
    site.num_chargers = 2;
    const Timestamp w0 = ts("2019-01-01T00:00:00Z");
    SUBCASE("single interval") {
        const auto tl = build_occupancy_timeline(site, {rec("a", "2019-01-01T00:10:00Z", "2019-01-01T00:20:00Z")}, w0,
                                                 w0 + Minutes{60});
        REQUIRE(tl.size() == 60);
        for (std::size_t i = 0; i < 60; ++i) CHECK(tl.counts[i] == (i >= 10 && i < 20 ? 1 : 0));
    }
    SUBCASE("overlap adds") {
        const auto tl = build_occupancy_timeline(site, {rec("a", "2019-01-01T00:10:00Z", "2019-01-01T00:20:00Z"),
                                                        rec("b", "2019-01-01T00:15:00Z", "2019-01-01T00:30:00Z")},
                                                 w0, w0 + Minutes{60});
        for (std::size_t i = 15; i < 20; ++i) CHECK(tl.counts[i] == 2);
        CHECK(tl.counts[14] == 1);
        CHECK(tl.counts[20] == 1);
    }
    SUBCASE("partial slot overlap counts") {
        const auto tl = build_occupancy_timeline(site, {rec("a", "2019-01-01T00:10:30Z", "2019-01-01T00:12:01Z")}, w0,
                                                 w0 + Minutes{60});
        CHECK(tl.counts[9] == 0);
        CHECK(tl.counts[10] == 1);
        CHECK(tl.counts[12] == 1);
        CHECK(tl.counts[13] == 0);
    }
    SUBCASE("counts are capped with a counter") {
        const auto tl = build_occupancy_timeline(site, {rec("a", "2019-01-01T00:00:00Z", "2019-01-01T00:10:00Z"),
                                                        rec("b", "2019-01-01T00:00:00Z", "2019-01-01T00:10:00Z"),
                                                        rec("c", "2019-01-01T00:05:00Z", "2019-01-01T00:10:00Z")},
                                                 w0, w0 + Minutes{60});
        CHECK(tl.counts[6] == 2);
        CHECK(tl.capped_slots == 5);
    }
    SUBCASE("bad windows") {
        CHECK_THROWS_AS(build_occupancy_timeline(site, {}, w0, w0), ArgumentError);
        CHECK_THROWS_AS(build_occupancy_timeline(site, {}, w0 + Seconds{5}, w0 + Minutes{60}), ArgumentError);
    }
}

TEST_CASE("random fixtures match the brute-force slot scan") {
    Rng rng(2024);
    const Timestamp w0 = ts("2019-06-01T00:00:00Z");
    for (int trial = 0; trial < 30; ++trial) {
        Site site;
        site.site_id = "X";
        site.num_chargers = 1 + static_cast<int>(rng.index(4));
        const std::size_t T = 240 + rng.index(600);
        std::vector<SessionRecord> ss;
        for (int i = 0; i < 50; ++i) {
            SessionRecord r = rec("s", "2019-01-01T00:00:00Z", "2019-01-01T00:03:00Z");
            // Sessions may start before or end after the window.
            r.start_time = w0 - Minutes{30} + Seconds{static_cast<long long>(rng.index((T + 30) * 60))};
            r.end_time = r.start_time + Seconds{1 + static_cast<long long>(rng.index(5400))};
            ss.push_back(r);
        }
        const auto tl = build_occupancy_timeline(site, ss, w0, w0 + Minutes{static_cast<long long>(T)});
        CHECK(tl.counts == brute_counts(ss, w0, T, site.num_chargers));
    }
}

TEST_CASE("rasterized total equals the per-session overlap minutes") {
    Rng rng(5);
    Site site;
    site.site_id = "X";
    site.num_chargers = 1000;
    const Timestamp w0 = ts("2019-06-01T00:00:00Z");
    const std::size_t T = 1440;
    std::vector<SessionRecord> ss;
    long long expected = 0;
    for (int i = 0; i < 100; ++i) {
        SessionRecord r = rec("s", "2019-01-01T00:00:00Z", "2019-01-01T00:03:00Z");
        r.start_time = w0 + Seconds{static_cast<long long>(rng.index(T * 60 - 7200))};
        r.end_time = r.start_time + Seconds{60 + static_cast<long long>(rng.index(7000))};
        const long long a = (r.start_time - w0).count();
        const long long b = (r.end_time - w0).count();
        expected += (b + 59) / 60 - a / 60;  // slots touched by [a, b)
        ss.push_back(r);
    }
    const auto tl = build_occupancy_timeline(site, ss, w0, w0 + Minutes{static_cast<long long>(T)});
    long long total = 0;
    for (int k : tl.counts) total += k;
    CHECK(total == expected);
}

TEST_CASE("sites file round trip") {
    std::map<std::string, Site> sites;
    Site s;
    s.site_id = "H2X1Y4";
    s.postal_code = "H2X1Y4";
    s.num_chargers = 3;
    s.station_ids = {"ST1", "ST2"};
    s.charger_levels = {ChargerLevel::L2, ChargerLevel::L3};
    sites[s.postal_code] = s;
    std::ostringstream out;
    write_sites(out, sites);
    std::istringstream in(out.str());
    const auto m = parse_sites(in);
    REQUIRE(m.contains("H2X1Y4"));
    CHECK(m.at("H2X1Y4").num_chargers == 3);
    CHECK(m.at("H2X1Y4").levels.size() == 2);
}
