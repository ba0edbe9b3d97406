#include "evqoe/mgk_sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <numeric>
#include <queue>

#include <fmt/format.h>

#include "evqoe/core/errors.hpp"
#include "evqoe/core/rng.hpp"
#include "evqoe/core/stats.hpp"
#include "evqoe/service_fit.hpp"

namespace evqoe::sim {

double service_mean(const ServiceLaw& law) {
    return std::visit(
        [](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, ErlangService>) return s.shape_k / s.rate;
            else return 1.0 / s.rate;
        },
        law);
}

double service_variance(const ServiceLaw& law) {
    return std::visit(
        [](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, ErlangService>) return s.shape_k / (s.rate * s.rate);
            else return 1.0 / (s.rate * s.rate);
        },
        law);
}

namespace {

double draw_service(const ServiceLaw& law, Rng& rng) {
    return std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, ErlangService>) {
                return service::sample_service(s.shape_k, s.rate, rng);
            } else {
                return rng.exponential(s.rate);
            }
        },
        law);
}

void validate(const SimConfig& c) {
    if (!(c.arrival_rate >= 0.0) || !std::isfinite(c.arrival_rate)) {
        throw ArgumentError("simulation: arrival rate must be non-negative");
    }
    if (c.num_servers < 1) throw ArgumentError("simulation: need at least one server");
    if (c.arrivals_per_round < 1) throw ArgumentError("simulation: arrivals_per_round must be >= 1");
    if (c.warmup_arrivals < 0) throw ArgumentError("simulation: negative warmup");
    const bool ok = std::visit(
        [](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, ErlangService>) return s.shape_k >= 1 && s.rate > 0.0;
            else return s.rate > 0.0;
        },
        c.service);
    if (!ok) throw ArgumentError("simulation: invalid service law");
}

void summarize(SimResult& r) {
    const auto& w = r.waiting_times;
    if (w.empty()) return;
    const auto ws = waiting_stats(w);
    r.mean_wait = ws.mean;
    r.p_zero_wait = ws.p_zero;
    r.p99_wait = ws.p99;
    r.n_delayed = std::count_if(w.begin(), w.end(), [](double x) { return x > 0.0; });
}

}  // namespace

SimResult simulate(const SimConfig& config, std::uint64_t seed) {
    validate(config);
    SimResult result;
    const double rho = config.load();
    result.unstable = rho >= 1.0;
    if (result.unstable) {
        result.note = fmt::format("offered load {:.3f} >= 1: waits grow without bound", rho);
    }
    if (config.arrival_rate == 0.0) {
        // Empty system: nobody arrives, nobody waits.
        result.round_means = {0.0};
        return result;
    }

    Rng rng(seed);
    const long long total = static_cast<long long>(config.warmup_arrivals) + config.arrivals_per_round;
    result.waiting_times.reserve(static_cast<std::size_t>(config.arrivals_per_round));
    if (config.record_trace) result.trace.reserve(static_cast<std::size_t>(config.arrivals_per_round));

    struct Departure {
        double time;
        int server;
        bool operator>(const Departure& o) const {
            return time != o.time ? time > o.time : server > o.server;
        }
    };
    std::priority_queue<Departure, std::vector<Departure>, std::greater<>> departures;
    std::priority_queue<int, std::vector<int>, std::greater<>> free_servers;
    for (int s = 0; s < config.num_servers; ++s) free_servers.push(s);

    struct Waiting {
        long long id;
        double arrival;
    };
    std::deque<Waiting> queue;

    double now = 0.0;
    double next_arrival = rng.exponential(config.arrival_rate);
    long long arrived = 0;
    const long long first_recorded = config.warmup_arrivals;

    double window_start = 0.0, window_end = 0.0, last_event = 0.0, queue_area = 0.0;
    bool window_open = false;

    auto advance = [&](double t) {
        if (window_open) queue_area += static_cast<double>(queue.size()) * (t - last_event);
        last_event = t;
        now = t;
    };
    auto start_service = [&](long long id, double arrival, int server) {
        const double service = draw_service(config.service, rng);
        departures.push({now + service, server});
        if (id >= first_recorded) {
            result.waiting_times.push_back(now - arrival);
            if (config.record_trace) result.trace.push_back({arrival, now, now + service, server});
        }
    };

    // Runs until every recorded customer has entered service.
    while (arrived < total || !queue.empty()) {
        const bool arrival_next =
            arrived < total && (departures.empty() || next_arrival < departures.top().time);
        if (arrival_next) {
            advance(next_arrival);
            const long long id = arrived++;
            if (id == first_recorded) {
                window_open = true;
                window_start = now;
                queue_area = 0.0;
            }
            if (id == total - 1) window_end = now;
            if (!free_servers.empty()) {
                const int s = free_servers.top();
                free_servers.pop();
                start_service(id, now, s);
            } else {
                queue.push_back({id, now});
            }
            if (id == total - 1) window_open = false;
            next_arrival = now + rng.exponential(config.arrival_rate);
        } else {
            const Departure d = departures.top();
            departures.pop();
            advance(d.time);
            if (!queue.empty()) {
                const Waiting w = queue.front();
                queue.pop_front();
                start_service(w.id, w.arrival, d.server);
            } else {
                free_servers.push(d.server);
            }
        }
    }

    // Customers were recorded in service-start order, which under FIFO is arrival order.
    const double span = window_end - window_start;
    if (span > 0.0) {
        result.mean_queue_length = queue_area / span;
        result.observed_arrival_rate = static_cast<double>(config.arrivals_per_round - 1) / span;
    }
    summarize(result);
    result.round_means = {result.mean_wait};
    return result;
}

double erlang_c_probability(int k, double a) {
    if (k < 1) throw ArgumentError("Erlang-C: need at least one server");
    if (!(a >= 0.0) || a >= k) throw ArgumentError("Erlang-C: offered load must be below k");
    // Erlang-B recurrence, then the B -> C conversion.
    double b = 1.0;
    for (int i = 1; i <= k; ++i) b = a * b / (i + a * b);
    return k * b / (k - a * (1.0 - b));
}

double erlang_c_wait(int k, double lambda, double mu) {
    if (!(mu > 0.0)) throw ArgumentError("Erlang-C: service rate must be positive");
    if (!(lambda >= 0.0) || lambda >= k * mu) {
        throw ArgumentError("Erlang-C: unstable parameters (lambda >= k mu)");
    }
    if (lambda == 0.0) return 0.0;
    return erlang_c_probability(k, lambda / mu) / (k * mu - lambda);
}

double pollaczek_khinchine_wait(double lambda, const ServiceLaw& law) {
    const double m = service_mean(law);
    const double rho = lambda * m;
    if (!(lambda >= 0.0) || rho >= 1.0) throw ArgumentError("P-K: unstable parameters");
    const double second_moment = service_variance(law) + m * m;
    return lambda * second_moment / (2.0 * (1.0 - rho));
}

std::uint64_t round_seed(std::uint64_t master, int round) {
    return derive_seed(master, static_cast<std::uint64_t>(round));
}

Replication replicate(const SimConfig& config, double level) {
    if (config.rounds < 2) throw ArgumentError("replicate: need at least two rounds");
    validate(config);

    std::vector<SimResult> rounds(static_cast<std::size_t>(config.rounds));
    for (int i = 0; i < config.rounds; ++i) {
        rounds[static_cast<std::size_t>(i)] = simulate(config, round_seed(config.seed, i));
    }

    Replication rep;
    SimResult& agg = rep.aggregate;
    agg.unstable = rounds.front().unstable;
    agg.note = rounds.front().note;
    double queue_sum = 0.0, rate_sum = 0.0;
    for (auto& r : rounds) {
        agg.round_means.push_back(r.mean_wait);
        agg.waiting_times.insert(agg.waiting_times.end(), r.waiting_times.begin(),
                                 r.waiting_times.end());
        if (config.record_trace) agg.trace.insert(agg.trace.end(), r.trace.begin(), r.trace.end());
        queue_sum += r.mean_queue_length;
        rate_sum += r.observed_arrival_rate;
    }
    agg.mean_queue_length = queue_sum / config.rounds;
    agg.observed_arrival_rate = rate_sum / config.rounds;
    summarize(agg);

    const double point = stats::mean(agg.round_means);
    const double sd = std::sqrt(stats::variance(agg.round_means));
    const double half = stats::t_quantile(0.5 + level / 2.0, config.rounds - 1) * sd /
                        std::sqrt(static_cast<double>(config.rounds));
    rep.mean_wait_ci = {level, point - half, point, point + half};
    return rep;
}

WaitingStats waiting_stats(std::span<const double> waits) {
    if (waits.empty()) throw ArgumentError("waiting_stats: no waits");
    std::vector<double> sorted(waits.begin(), waits.end());
    std::sort(sorted.begin(), sorted.end());
    WaitingStats s;
    s.mean = stats::mean(waits);
    const auto zeros = std::upper_bound(sorted.begin(), sorted.end(), 0.0) - sorted.begin();
    s.p_zero = static_cast<double>(zeros) / static_cast<double>(sorted.size());
    s.p99 = stats::quantile_sorted(sorted, 0.99);
    return s;
}

std::vector<std::pair<double, double>> waiting_histogram(std::span<const double> waits,
                                                         double bin_width) {
    if (!(bin_width > 0.0)) throw ArgumentError("waiting histogram: bin width must be positive");
    std::vector<std::pair<double, double>> out;
    if (waits.empty()) return out;
    const double max_w = *std::max_element(waits.begin(), waits.end());
    const auto bins = static_cast<std::size_t>(std::floor(max_w / bin_width)) + 1;
    std::vector<long long> counts(bins, 0);
    for (double w : waits) ++counts[std::min(bins - 1, static_cast<std::size_t>(w / bin_width))];
    const double norm = static_cast<double>(waits.size()) * bin_width;
    out.reserve(bins);
    for (std::size_t i = 0; i < bins; ++i) {
        out.emplace_back(static_cast<double>(i) * bin_width, static_cast<double>(counts[i]) / norm);
    }
    return out;
}

WeekdayProfile weekday_profile(std::span<const double> daily, int first_weekday) {
    WeekdayProfile profile;
    profile.fill(1.0 / 7.0);
    if (first_weekday < 0 || first_weekday > 6) throw ArgumentError("weekday index out of range");
    // Complete Monday..Sunday weeks only.
    const std::size_t offset = static_cast<std::size_t>((7 - first_weekday) % 7);
    WeekdayProfile share{};
    int weeks = 0;
    for (std::size_t w = offset; w + 7 <= daily.size(); w += 7) {
        double total = 0.0;
        for (std::size_t d = 0; d < 7; ++d) total += daily[w + d];
        if (total <= 0.0) continue;
        for (std::size_t d = 0; d < 7; ++d) share[d] += daily[w + d] / total;
        ++weeks;
    }
    if (weeks == 0) return profile;
    for (std::size_t d = 0; d < 7; ++d) profile[d] = share[d] / weeks;
    return profile;
}

std::vector<double> disaggregate_weekly(std::span<const double> weekly,
                                        const WeekdayProfile& profile) {
    const double norm = std::accumulate(profile.begin(), profile.end(), 0.0);
    if (!(norm > 0.0)) throw ArgumentError("weekday profile must have positive mass");
    std::vector<double> daily;
    daily.reserve(weekly.size() * 7);
    for (double w : weekly) {
        if (w < 0.0) throw ArgumentError("negative weekly request count");
        for (double p : profile) daily.push_back(w * p / norm);
    }
    return daily;
}

std::vector<double> daily_arrival_rates(std::span<const double> daily) {
    std::vector<double> rates;
    rates.reserve(daily.size());
    for (double n : daily) {
        if (n < 0.0) throw ArgumentError("negative daily request count");
        rates.push_back(n / 1440.0);
    }
    return rates;
}

}  // namespace evqoe::sim
