#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "evqoe/core/csv.hpp"
#include "evqoe/core/errors.hpp"
#include "evqoe/core/rng.hpp"
#include "evqoe/core/stats.hpp"
#include "evqoe/core/time.hpp"

using namespace evqoe;

TEST_CASE("csv reader handles quotes, comments and line numbers") {
    std::istringstream in("# provenance\na,b\n\"x,1\",\"say \"\"hi\"\"\"\n\"multi\nline\",2\n");
    csv::Reader r(in);
    auto h = r.next();
    REQUIRE(h);
    CHECK(r.line() == 2);
    auto row = r.next();
    REQUIRE(row);
    CHECK((*row)[0] == "x,1");
    CHECK((*row)[1] == "say \"hi\"");
    row = r.next();
    REQUIRE(row);
    CHECK((*row)[0] == "multi\nline");
    CHECK(r.line() == 4);
    CHECK_FALSE(r.next());

    std::istringstream bad("\"open,1\n");
    csv::Reader rb(bad);
    CHECK_THROWS_AS(rb.next(), SchemaError);
}

TEST_CASE("csv writer round trips through the reader") {
    const csv::Row row{"plain", "a,b", "q\"q", "line\nbreak", ""};
    std::ostringstream out;
    csv::write_row(out, row);
    std::istringstream in(out.str());
    csv::Reader r(in);
    CHECK(*r.next() == row);
}

TEST_CASE("numeric parsing and formatting") {
    CHECK(*csv::parse_double("12.5") == 12.5);
    CHECK_FALSE(csv::parse_double(" 1"));
    CHECK_FALSE(csv::parse_double("1x"));
    CHECK_FALSE(csv::parse_double(""));
    CHECK(*csv::parse_int("-42") == -42);
    CHECK_FALSE(csv::parse_int("4.2"));
    CHECK(csv::format_double(0.1) == "0.1");
    CHECK(*csv::parse_double(csv::format_double(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK(csv::format_fixed(2.0 / 3.0, 2) == "0.67");
    const csv::Row header{"a", "b", "c"};
    CHECK(csv::require_columns(header, {"c", "a"}, "t") == std::vector<std::size_t>{2, 0});
    CHECK_THROWS_AS(csv::require_columns(header, {"d"}, "t"), SchemaError);
}

TEST_CASE("timestamps and calendar helpers") {
    const auto t = parse_timestamp("2020-02-29T23:59:30Z");
    REQUIRE(t);
    CHECK(format_timestamp(*t) == "2020-02-29T23:59:30Z");
    CHECK_FALSE(parse_timestamp("2020-02-30T00:00:00Z"));
    CHECK_FALSE(parse_timestamp("2020-02-29 23:59:30"));
    CHECK_FALSE(parse_date("2019-02-29"));
    const Date d = make_date(2021, 1, 3);
    CHECK(weekday_index(d) == 6);
    CHECK(iso_week(d) == 53);
    CHECK(week_monday(d) == make_date(2020, 12, 28));
    CHECK(day_of_year(make_date(2020, 12, 31)) == 366);
    CHECK(date_of(*t) == make_date(2020, 2, 29));
    CHECK(format_date(make_date(2019, 7, 4)) == "2019-07-04");
}

TEST_CASE("rng determinism and derived streams") {
    Rng a(5), b(5);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    Rng r(9);
    double sum = 0;
    for (int i = 0; i < 200000; ++i) {
        const double u = r.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(sum / 200000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("rng variates have the right first two moments") {
    Rng r(11);
    std::vector<double> e, z, p;
    for (int i = 0; i < 200000; ++i) {
        e.push_back(r.exponential(0.25));
        z.push_back(r.normal());
        p.push_back(static_cast<double>(r.poisson(7.5)));
    }
    CHECK(stats::mean(e) == doctest::Approx(4.0).epsilon(0.02));
    CHECK(stats::variance(e) == doctest::Approx(16.0).epsilon(0.04));
    CHECK(std::abs(stats::mean(z)) < 0.01);
    CHECK(stats::variance(z) == doctest::Approx(1.0).epsilon(0.02));
    CHECK(stats::mean(p) == doctest::Approx(7.5).epsilon(0.01));
    CHECK(stats::variance(p) == doctest::Approx(7.5).epsilon(0.03));
    std::vector<double> big;
    for (int i = 0; i < 20000; ++i) big.push_back(static_cast<double>(r.poisson(500.0)));
    CHECK(stats::mean(big) == doctest::Approx(500.0).epsilon(0.005));
    CHECK(r.poisson(0.0) == 0);
}

TEST_CASE("descriptive statistics") {
    const std::vector<double> xs{4, 1, 3, 2};
    CHECK(stats::mean(xs) == 2.5);
    CHECK(stats::variance(xs) == doctest::Approx(5.0 / 3.0));
    CHECK(stats::quantile(xs, 0.5) == 2.5);
    CHECK(stats::quantile(xs, 0.0) == 1.0);
    CHECK(stats::quantile(xs, 1.0) == 4.0);
    CHECK(stats::quantile(std::vector<double>{0, 10}, 0.99) == doctest::Approx(9.9));
    CHECK_THROWS_AS(stats::mean(std::vector<double>{}), ArgumentError);
}

TEST_CASE("normal and t quantiles against tabulated values") {
    CHECK(stats::normal_quantile(0.975) == doctest::Approx(1.959963985).epsilon(1e-9));
    CHECK(stats::normal_quantile(0.995) == doctest::Approx(2.575829304).epsilon(1e-9));
    CHECK(stats::normal_quantile(0.01) == doctest::Approx(-2.326347874).epsilon(1e-9));
    CHECK(stats::normal_cdf(stats::normal_quantile(0.3)) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(stats::z_for_level(0.99) == doctest::Approx(2.575829304).epsilon(1e-9));
    CHECK(stats::t_quantile(0.975, 1) == doctest::Approx(12.7062).epsilon(1e-4));
    CHECK(stats::t_quantile(0.975, 29) == doctest::Approx(2.04523).epsilon(1e-4));
    CHECK(stats::t_quantile(0.995, 10) == doctest::Approx(3.16927).epsilon(1e-4));
    CHECK(stats::t_quantile(0.975, 60) == doctest::Approx(2.00030).epsilon(1e-3));
    CHECK(stats::t_quantile(0.975, 100000) == doctest::Approx(1.95996).epsilon(1e-3));
}

TEST_CASE("two-sample KS") {
    Rng r(2);
    std::vector<double> a, b, c;
    for (int i = 0; i < 2000; ++i) {
        a.push_back(r.normal());
        b.push_back(r.normal());
        c.push_back(r.normal(0.5, 1.0));
    }
    const auto same = stats::ks_two_sample(a, b);
    CHECK(same.p_value > 0.01);
    const auto shifted = stats::ks_two_sample(a, c);
    CHECK(shifted.p_value < 1e-6);
    CHECK(stats::ks_two_sample(a, a).statistic == 0.0);
    CHECK(stats::ks_two_sample({0, 1}, {2, 3}).statistic == 1.0);
}
