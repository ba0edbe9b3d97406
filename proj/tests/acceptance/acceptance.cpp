// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "evqoe/cli/commands.hpp"
#include "evqoe/cli/config.hpp"
#include "evqoe/core/rng.hpp"
#include "evqoe/core/stats.hpp"
#include "evqoe/features.hpp"
#include "evqoe/forecast/backtest.hpp"
#include "evqoe/forecast/diagnostics.hpp"
#include "evqoe/forecast/grid_search.hpp"
#include "evqoe/forecast/sarimax.hpp"
#include "evqoe/forecast/transforms.hpp"
#include "evqoe/gapfill.hpp"
#include "evqoe/mgk_sim.hpp"
#include "evqoe/qoe_metrics.hpp"
#include "evqoe/service_fit.hpp"
#include "evqoe/synth.hpp"

using namespace evqoe;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

int failures = 0;

void run(int id, const std::string& name, double time_limit_s, const std::function<Outcome()>& body) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, fmt::format("threw: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (time_limit_s > 0 && secs > time_limit_s) {
        o.pass = false;
        o.detail += fmt::format("; exceeded {:.0f} s limit", time_limit_s);
    }
    if (!o.pass) ++failures;
    fmt::print("{} {:>2} {}: {} ({:.2f} s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail, secs);
    std::fflush(stdout);
}

ingest::OccupancyTimeline random_timeline(Rng& rng, int n, std::size_t T) {
    ingest::OccupancyTimeline t;
    t.site_id = "X";
    t.window_start = Timestamp{make_date(2020, 1, 1)};
    t.num_chargers = n;
    t.counts.resize(T);
    for (auto& k : t.counts) k = static_cast<int>(rng.index(static_cast<std::size_t>(n) + 1));
    return t;
}

// ---------------------------------------------------------------------------------------------

Outcome metric_oracle() {
    Rng rng(1);
    int bad = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 1 + static_cast<int>(rng.index(6));
        const auto t = random_timeline(rng, n, 60 + rng.index(10080 - 60 + 1));
        std::uint64_t sum = 0, occ = 0, zero = 0, full = 0;
        for (int k : t.counts) {
            sum += static_cast<std::uint64_t>(k);
            occ += k >= 1;
            zero += k == 0;
            full += k == n;
        }
        const std::uint64_t T = t.counts.size();
        using qoe::Ratio;
        const Ratio U = qoe::utilization(t), O = qoe::occupancy(t), I = qoe::idleness(t), B = qoe::blocking(t);
        const bool exact = U == Ratio{sum, T * static_cast<std::uint64_t>(n)} && O == Ratio{occ, T} &&
                           I == Ratio{zero, T} && B == Ratio{full, T};
        const bool order = B <= U && U <= O;
        const bool complement = Ratio{I.num * O.den + O.num * I.den, I.den * O.den} == Ratio{1, 1};
        bad += !(exact && order && complement);
    }
    return {bad == 0, fmt::format("{} of 1000 timelines disagree", bad)};
}

Outcome single_charger_identity() {
    Rng rng(2);
    int bad = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto t = random_timeline(rng, 1, 60 + rng.index(10080 - 60 + 1));
        const auto U = qoe::utilization(t), O = qoe::occupancy(t), B = qoe::blocking(t);
        bad += !(U == O && O == B);
    }
    return {bad == 0, fmt::format("{} of 200 timelines break U = Omega = P_B", bad)};
}

Outcome queue_oracle() {
    double worst_wait = 0.0, worst_little = 0.0;
    std::string where;
    for (int k : {1, 2, 4}) {
        for (double rho : {0.3, 0.5, 0.7, 0.9}) {
            sim::SimConfig c;
            c.num_servers = k;
            c.arrival_rate = rho * k;
            c.service = sim::ExponentialService{1.0};
            c.seed = derive_seed(3, static_cast<std::uint64_t>(k * 100 + std::lround(rho * 10)));
            const auto rep = sim::replicate(c);
            const double analytic = sim::erlang_c_wait(k, c.arrival_rate, 1.0);
            const double err = std::abs(rep.aggregate.mean_wait - analytic) / analytic;
            const double little = std::abs(rep.aggregate.mean_queue_length -
                                           rep.aggregate.observed_arrival_rate * rep.aggregate.mean_wait) /
                                  rep.aggregate.mean_queue_length;
            if (err > worst_wait) {
                worst_wait = err;
                where = fmt::format("k={} rho={}", k, rho);
            }
            worst_little = std::max(worst_little, little);
        }
    }
    return {worst_wait <= 0.05 && worst_little <= 0.03,
            fmt::format("worst mean-wait error {:.2f}% at {}, worst Little's-law gap {:.2f}%", 100 * worst_wait,
                        where, 100 * worst_little)};
}

Outcome pollaczek_khinchine() {
    sim::SimConfig e;
    e.arrival_rate = 0.7;
    e.service = sim::ErlangService{4, 4.0};
    e.seed = 4;
    const double simulated = sim::replicate(e).aggregate.mean_wait;
    const double pk = sim::pollaczek_khinchine_wait(0.7, e.service);
    const double mm1 = sim::erlang_c_wait(1, 0.7, 1.0);
    const double err = std::abs(simulated - pk) / pk;
    return {err <= 0.05 && simulated < mm1,
            fmt::format("simulated {:.4f} vs P-K {:.4f} ({:.2f}%), M/M/1 {:.4f}", simulated, pk, 100 * err, mm1)};
}

Outcome erlang_recovery() {
    std::string detail;
    bool ok = true;
    for (int k : {1, 2, 4, 8}) {
        const double rate = k / 40.0;
        int hits = 0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            Rng rng(derive_seed(5, static_cast<std::uint64_t>(k) * 1000 + seed));
            std::vector<double> d(10000);
            for (auto& x : d) x = service::sample_service(k, rate, rng);
            const auto fit = service::fit_erlang(d);
            hits += fit.shape_k == k && std::abs(fit.rate - rate) / rate <= 0.05;
        }
        ok = ok && hits >= 95;
        detail += fmt::format("{}k={}: {}/100", detail.empty() ? "" : ", ", k, hits);
    }
    return {ok, detail};
}

Outcome gapfill_fidelity() {
    // Planted growth trend without seasonality: a bridge across 18 months cannot recover a
    // seasonal swing inside the gap. 18-month gap at 60% suppression.
    synth::SynthConfig c;
    c.start = make_date(2018, 1, 1);
    c.end = make_date(2022, 12, 31);
    c.gap = synth::GapConfig{make_date(2020, 1, 1), make_date(2021, 6, 30), 0.6};
    synth::SiteConfig s;
    s.site_id = "G";
    s.postal_code = "H2X1Y4";
    s.base_rate = 40.0;
    s.annual_amplitude = 0.0;
    s.growth_per_year = 0.1;
    c.sites = {s};
    gapfill::GapSpec gap{c.gap->start, c.gap->end, 30};

    int trend_fail = 0, ks_fail = 0, changed = 0, good = 0;
    double worst = 0.0, min_p = 1.0;
    const int seeds = 50;
    for (int seed = 1; seed <= seeds; ++seed) {
        c.seed = static_cast<std::uint64_t>(seed);
        const auto norm = c.normalized();
        const gapfill::DailySeries series{"G", c.start, synth::daily_counts(c, 0)};
        const auto filled = gapfill::fill_gap(series, gap, derive_seed(6, static_cast<std::uint64_t>(seed)));
        const auto mask = gapfill::gap_mask(series, gap);

        std::vector<double> planted;
        auto no_gap = norm;
        no_gap.gap.reset();
        for (std::size_t d = 0; d < mask.size(); ++d)
            planted.push_back(synth::expected_rate(norm.sites[0], no_gap, c.start + std::chrono::days{static_cast<int>(d)}));

        std::vector<double> rebuilt;
        bool seed_trend_ok = true;
        for (std::size_t d = 0; d < mask.size(); ++d) {
            if (!mask[d]) {
                changed += filled.series.values[d] != series.values[d];
                continue;
            }
            rebuilt.push_back((filled.series.values[d] - filled.trend[d]) / filled.trend[d]);
            if (d < 15 || d + 15 >= mask.size() || !mask[d - 15] || !mask[d + 15]) continue;
            double got = 0, truth = 0;
            for (std::size_t j = d - 15; j <= d + 15; ++j) {
                got += filled.series.values[j];
                truth += planted[j];
            }
            const double err = std::abs(got - truth) / truth;
            worst = std::max(worst, err);
            seed_trend_ok = seed_trend_ok && err <= 0.15;
        }
        trend_fail += !seed_trend_ok;
        const auto ks = stats::ks_two_sample(rebuilt, filled.residuals.samples);
        min_p = std::min(min_p, ks.p_value);
        ks_fail += ks.p_value < 0.01;
        good += seed_trend_ok && ks.p_value >= 0.01;
    }
    return {good == seeds && changed == 0,
            fmt::format("{}/{} seeds pass both checks; tracking within 15% misses {}, worst {:.1f}%; "
                        "KS below 0.01 on {}, min p {:.3f}; {} non-gap days changed",
                        good, seeds, trend_fail, 100 * worst, ks_fail, min_p, changed)};
}

Outcome fractional_differencing() {
    Rng rng(7);
    std::vector<double> y(600);
    double level = 100.0;
    for (auto& v : y) v = (level += rng.normal());
    const auto d1 = forecast::frac_diff(y, 1.0);
    bool exact = d1.size() == y.size() - 1;
    for (std::size_t i = 0; exact && i < d1.size(); ++i) exact = d1[i] == y[i + 1] - y[i];

    const auto sd = forecast::seasonal_diff(y, 1, 52);
    const auto J = forecast::effective_truncation(sd.size(), 100);
    const auto w = forecast::frac_diff(sd, 0.6, 100);
    const std::size_t k = 100;
    const std::vector<double> future(w.end() - k, w.end());
    const std::vector<double> history(y.begin(), y.end() - k);
    const auto back = forecast::invert_transforms(future, history, 0.6, 1, 52, J);
    double worst = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        worst = std::max(worst, std::abs(back[i] - y[y.size() - k + i]) / std::abs(y[y.size() - k + i]));

    const auto pi = forecast::frac_weights(0.5, 4);
    const double werr = std::max({std::abs(pi[1] + 0.5), std::abs(pi[2] + 0.125), std::abs(pi[3] + 0.0625)});
    return {exact && worst <= 1e-8 && werr <= 1e-12,
            fmt::format("d=1 exact: {}, round-trip error {:.1e}, weight error {:.1e}", exact ? "yes" : "no", worst, werr)};
}

Outcome sarimax_recovery() {
    int ar_hits = 0, beta_hits = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(derive_seed(8, seed));
        std::vector<double> y(500);
        double u = 0.0;
        for (int i = 0; i < 100; ++i) u = 0.6 * u + rng.normal();
        for (auto& v : y) v = 10.0 + (u = 0.6 * u + rng.normal());
        const auto fit = forecast::fit_sarimax(y, {}, forecast::SarimaxSpec{1, 0.0, 0});
        ar_hits += fit.converged && std::abs(fit.ar_coeffs[0] - 0.6) <= 0.08;

        std::vector<double> x(400), z(400);
        u = 0.0;
        for (std::size_t t = 0; t < 400; ++t) {
            x[t] = 500.0 + 2.0 * static_cast<double>(t) + 20.0 * rng.normal();
            u = 0.4 * u + rng.normal(0.0, 10.0);
            z[t] = 50.0 + 0.8 * x[t] + u;
        }
        const auto fx = forecast::fit_sarimax(z, {x}, forecast::SarimaxSpec{1, 0.0, 0, 0, 0, 0, 52, 1});
        beta_hits += fx.converged && std::abs(fx.exog_coeffs[0] - 0.8) / 0.8 <= 0.10;
    }
    return {ar_hits >= 45 && beta_hits >= 45,
            fmt::format("AR(1) within 0.08 in {}/50, exog coefficient within 10% in {}/50", ar_hits, beta_hits)};
}

features::WeeklySeries synthetic_weekly(std::size_t site, std::uint64_t seed, bool with_exog) {
    auto cfg = synth::reference_config();
    cfg.gap.reset();
    cfg.seed = seed;
    const auto counts = synth::daily_counts(cfg, site);
    const gapfill::DailySeries daily{"S", cfg.start, counts};
    if (!with_exog) return features::weekly_aggregate(daily);
    const auto reg = synth::registry_series(cfg);
    const auto region = "region:" + features::region_of(cfg.sites[site].postal_code);
    std::vector<double> evs;
    for (std::size_t i = 0; i < counts.size(); ++i)
        evs.push_back(reg.lookup(region, "evs", cfg.start + std::chrono::days{static_cast<int>(i)}));
    return features::weekly_aggregate(daily, {{"region_evs", evs}});
}

Outcome forecast_quality() {
    double worst = 0.0;
    int beaten = 0, total = 0;
    std::string detail;
    for (std::size_t site = 0; site < 2; ++site) {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto w = synthetic_weekly(site, derive_seed(9, seed), true);
            const auto train = w.head(208);
            const auto gs = forecast::grid_search(train.y, train.exog, forecast::SarimaxGrid{}, 52);
            forecast::SarimaxGrid flat;
            flat.P = {0};
            flat.D = {0};
            flat.Q = {0};
            const auto ga = forecast::grid_search(train.y, {}, flat, 52);
            auto models = forecast::default_models(gs.best);
            models.arima = ga.best;
            const auto bt = forecast::backtest(w, 208, 52, models);
            std::map<std::string, double> mape;
            for (const auto& r : bt.rows)
                mape[r.model] = r.report && r.report->mape ? *r.report->mape : INFINITY;
            worst = std::max(worst, mape["SARIMAX"]);
            beaten += mape["SARIMAX"] < mape["ARIMA"] && mape["SARIMAX"] < mape["ETS"];
            ++total;
        }
    }
    return {worst <= 20.0 && beaten == total,
            fmt::format("{} series, 208 training weeks: worst SARIMAX holdout MAPE {:.2f}%, beats ARIMA and ETS "
                        "without seasonality on {}/{}",
                        total, worst, beaten, total)};
}

Outcome interval_coverage() {
    std::size_t covered = 0, points = 0, not_converged = 0;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        const auto w = synthetic_weekly(1, derive_seed(10, seed), false);
        const auto fit = forecast::fit_sarimax(std::span(w.y).first(208), {}, forecast::SarimaxSpec{0, 0.6, 1, 0, 1, 1});
        not_converged += !fit.converged;
        const auto fc = forecast::forecast(fit, 52, {}, 0.99);
        for (std::size_t h = 0; h < 52; ++h) {
            const double a = w.y[208 + h];
            covered += a >= fc.lower[h] && a <= fc.upper[h];
            ++points;
        }
    }
    const double freq = static_cast<double>(covered) / static_cast<double>(points);
    return {freq >= 0.95, fmt::format("99% bands cover {:.4f} of {} held-out weeks over 200 seeds "
                                      "({} fits not converged)",
                                      freq, points, not_converged)};
}

Outcome adf_sanity() {
    int kept = 0, rejected = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(derive_seed(11, seed));
        std::vector<double> rw(500), ar(500);
        double x = 0.0, u = 0.0;
        for (int i = 0; i < 100; ++i) u = 0.5 * u + rng.normal();
        for (std::size_t t = 0; t < 500; ++t) {
            rw[t] = (x += rng.normal());
            ar[t] = (u = 0.5 * u + rng.normal());
        }
        const auto max_lags = static_cast<std::size_t>(std::floor(12.0 * std::pow(500.0 / 100.0, 0.25)));
        kept += !forecast::adf_test(rw, max_lags).reject_5;
        rejected += forecast::adf_test(ar, max_lags).reject_5;
    }
    return {kept >= 90 && rejected >= 90,
            fmt::format("random walks not rejected {}/100, AR(1) rejected {}/100", kept, rejected)};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

Outcome pipeline_determinism() {
    const fs::path root = fs::temp_directory_path() / "evqoe_acceptance_pipeline";
    fs::remove_all(root);
    cli::Config synth_cfg;
    synth_cfg.set("out", (root / "data").string());
    cli::cmd_synth(synth_cfg);
    std::vector<std::map<std::string, std::string>> trees;
    for (const char* run_name : {"run1", "run2"}) {
        auto cfg = cli::Config::load(root / "data" / "synth" / "pipeline.ini");
        cfg.set("out", (root / run_name).string());
        if (cli::cmd_pipeline(cfg) != 0) return {false, fmt::format("{} failed", run_name)};
        std::map<std::string, std::string> files;
        for (const auto& e : fs::recursive_directory_iterator(root / run_name))
            if (e.is_regular_file()) files[fs::relative(e.path(), root / run_name).generic_string()] = slurp(e.path());
        trees.push_back(std::move(files));
    }
    std::size_t differing = 0;
    for (const auto& [name, bytes] : trees[0]) {
        auto it = trees[1].find(name);
        differing += it == trees[1].end() || it->second != bytes;
    }
    differing += trees[1].size() > trees[0].size() ? trees[1].size() - trees[0].size() : 0;
    return {differing == 0 && trees[0].size() >= 7,
            fmt::format("{} artifacts compared, {} differ", trees[0].size(), differing)};
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::warn);
    run(1, "metric-oracle equivalence", 10, metric_oracle);
    run(2, "single-charger identity", 0, single_charger_identity);
    run(3, "queueing oracle", 120, queue_oracle);
    run(4, "M/G/1 second oracle", 0, pollaczek_khinchine);
    run(5, "Erlang fit recovery", 30, erlang_recovery);
    run(6, "gap-fill fidelity", 0, gapfill_fidelity);
    run(7, "fractional differencing", 0, fractional_differencing);
    run(8, "SARIMAX parameter recovery", 60, sarimax_recovery);
    run(9, "forecast quality", 600, forecast_quality);
    run(10, "interval coverage", 0, interval_coverage);
    run(11, "ADF sanity", 0, adf_sanity);
    run(12, "end-to-end determinism", 0, pipeline_determinism);
    fmt::print("{} of 12 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
