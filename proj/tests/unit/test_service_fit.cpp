#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "evqoe/core/errors.hpp"
#include "evqoe/core/stats.hpp"
#include "evqoe/service_fit.hpp"

using namespace evqoe;
using namespace evqoe::service;

namespace {

std::vector<double> erlang_samples(int k, double rate, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> out(n);
    for (auto& x : out) x = sample_service(k, rate, rng);
    return out;
}

}  // namespace

TEST_CASE("histogram of a point mass") {
    const std::vector<double> d(50, 30.0);
    const auto h = empirical_service_distribution(d, 2.0);
    int occupied = 0;
    for (auto c : h.counts) occupied += c > 0;
    CHECK(occupied == 1);
    CHECK(h.total == 50);
    REQUIRE(h.counts.size() == 15);
    CHECK(h.counts.back() == 50);
}

TEST_CASE("histogram density integrates to one") {
    const auto d = erlang_samples(3, 0.1, 10000, 1);
    const auto h = empirical_service_distribution(d, 2.0);
    const auto dens = h.density();
    const double mass = std::accumulate(dens.begin(), dens.end(), 0.0) * h.bin_width;
    CHECK(std::abs(mass - 1.0) < 1e-12);
    CHECK(std::accumulate(h.counts.begin(), h.counts.end(), 0LL) == h.total);
    CHECK(h.mean() == doctest::Approx(30.0).epsilon(0.02));
}

TEST_CASE("histogram input errors") {
    CHECK_THROWS_AS(empirical_service_distribution(std::vector<double>{}, 2.0), ArgumentError);
    CHECK_THROWS_AS(empirical_service_distribution(std::vector<double>{1, 2}, 0.0), ArgumentError);
    CHECK_THROWS_AS(empirical_service_distribution(std::vector<double>{1, -2}, 1.0), ArgumentError);
}

TEST_CASE("erlang pdf") {
    CHECK(erlang_pdf(2.0, 1, 0.5) == doctest::Approx(0.5 * std::exp(-1.0)));
    // k = 3, rate 0.1 at x = 20: 0.1^3 * 20^2 * e^-2 / 2
    CHECK(erlang_pdf(20.0, 3, 0.1) == doctest::Approx(0.001 * 400 * std::exp(-2.0) / 2));
    CHECK(erlang_pdf(-1.0, 2, 1.0) == 0.0);
    // Large shapes evaluate through logs without overflow.
    CHECK(std::isfinite(erlang_pdf(100.0, 50, 0.5)));
}

TEST_CASE("exponential samples recover shape 1") {
    const auto fit = fit_erlang(erlang_samples(1, 0.05, 10000, 4));
    CHECK(fit.shape_k == 1);
    CHECK(fit.rate == doctest::Approx(0.05).epsilon(0.05));
}

TEST_CASE("erlang(4, 0.08) recovery with moment consistency and argmin") {
    const auto d = erlang_samples(4, 0.08, 10000, 7);
    const auto fit = fit_erlang(d);
    CHECK(fit.shape_k == 4);
    CHECK(fit.rate == doctest::Approx(0.08).epsilon(0.05));
    CHECK(std::abs(fit.mean() - stats::mean(d)) < 1e-9);
    CHECK(fit.n_samples == 10000);
    REQUIRE(fit.scan_rmse.size() == 50);
    for (double r : fit.scan_rmse) CHECK(fit.rmse <= r);
    CHECK(fit.rmse < 1e-3);
    CHECK(std::abs(fit.moment_shape - 4) <= 1);
}

TEST_CASE("wrong shape has strictly larger RMSE") {
    const auto d = erlang_samples(6, 0.2, 10000, 8);
    const auto fit = fit_erlang(d);
    const auto h = empirical_service_distribution(d, 2.0);
    CHECK(fit_rmse(h, 1, 1.0 / fit.sample_mean) > fit_rmse(h, fit));
}

TEST_CASE("single-bin histogram gives finite positive RMSE") {
    const auto h = empirical_service_distribution(std::vector<double>(40, 1.0), 2.0);
    const double r = fit_rmse(h, 3, 0.5);
    CHECK(std::isfinite(r));
    CHECK(r > 0.0);
}

TEST_CASE("fit input errors") {
    CHECK_THROWS_AS(fit_erlang(std::vector<double>(29, 10.0)), InsufficientData);
    std::vector<double> bad(40, 10.0);
    bad[3] = 0.0;
    CHECK_THROWS_AS(fit_erlang(bad), ArgumentError);
}

TEST_CASE("recovery across seeds for small shapes") {
    for (int k : {2, 5, 10}) {
        int hits = 0;
        for (std::uint64_t s = 0; s < 20; ++s) hits += fit_erlang(erlang_samples(k, 0.1, 10000, 100 + s)).shape_k == k;
        CHECK(hits >= 19);
    }
}

TEST_CASE("service sampler moments and determinism") {
    Rng a(3), b(3);
    for (int i = 0; i < 10; ++i) CHECK(sample_service(2, 0.3, a) == sample_service(2, 0.3, b));
    const auto e = erlang_samples(1, 0.2, 1000000, 5);
    CHECK(stats::mean(e) == doctest::Approx(5.0).epsilon(0.01));
    const auto g = erlang_samples(3, 0.1, 1000000, 6);
    CHECK(stats::variance(g) == doctest::Approx(300.0).epsilon(0.03));
}
