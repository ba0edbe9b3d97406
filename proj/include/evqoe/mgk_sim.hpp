#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace evqoe::sim {

struct ExponentialService {
    double rate = 1.0;  // per minute
};

struct ErlangService {
    int shape_k = 1;
    double rate = 1.0;  // per minute, per phase
};

using ServiceLaw = std::variant<ErlangService, ExponentialService>;

double service_mean(const ServiceLaw& law);
double service_variance(const ServiceLaw& law);

struct SimConfig {
    double arrival_rate = 0.0;  // lambda_E, arrivals per minute
    int num_servers = 1;
    ServiceLaw service = ExponentialService{1.0};
    int arrivals_per_round = 25000;
    int rounds = 30;
    int warmup_arrivals = 1000;
    std::uint64_t seed = 1;
    /// Keep per-customer arrival/start/departure records (tests and audits).
    bool record_trace = false;

    /// Offered load per server, lambda E[S] / k.
    double load() const { return arrival_rate * service_mean(service) / num_servers; }
};

struct CustomerTrace {
    double arrival = 0.0;
    double start = 0.0;
    double departure = 0.0;
    int server = 0;
};

struct SimResult {
    std::vector<double> waiting_times;  // minutes, post-warmup, in arrival order
    double mean_wait = 0.0;
    double p_zero_wait = 1.0;
    double p99_wait = 0.0;
    long long n_delayed = 0;
    /// Time-average number waiting over the post-warmup arrival window.
    double mean_queue_length = 0.0;
    /// Post-warmup arrivals divided by the length of the arrival window.
    double observed_arrival_rate = 0.0;
    bool unstable = false;
    std::string note;
    std::vector<double> round_means;
    std::vector<CustomerTrace> trace;
};

/// One FIFO M/G/k round: config.warmup_arrivals discarded, then exactly
/// config.arrivals_per_round recorded. Deterministic in `seed`.
SimResult simulate(const SimConfig& config, std::uint64_t seed);

/// Erlang-C probability of waiting for k servers at offered load a = lambda/mu.
double erlang_c_probability(int num_servers, double offered_load);
/// Analytic M/M/k mean wait. Throws ArgumentError when lambda >= k mu.
double erlang_c_wait(int num_servers, double arrival_rate, double service_rate);
/// Pollaczek-Khinchine M/G/1 mean wait.
double pollaczek_khinchine_wait(double arrival_rate, const ServiceLaw& law);

struct ConfidenceInterval {
    double level = 0.95;
    double lower = 0.0;
    double point = 0.0;
    double upper = 0.0;
};

struct Replication {
    SimResult aggregate;
    ConfidenceInterval mean_wait_ci;
};

/// Seed of round i is derive_seed(master, i).
std::uint64_t round_seed(std::uint64_t master, int round);

/// config.rounds independent rounds; CI from the t distribution of round means.
Replication replicate(const SimConfig& config, double level = 0.95);

struct WaitingStats {
    double mean = 0.0;
    double p_zero = 1.0;
    double p99 = 0.0;
};

WaitingStats waiting_stats(std::span<const double> waits);
inline WaitingStats waiting_stats(const SimResult& r) { return waiting_stats(r.waiting_times); }

/// (bin_start, density) pairs over [0, max wait].
std::vector<std::pair<double, double>> waiting_histogram(std::span<const double> waits,
                                                         double bin_width);

using WeekdayProfile = std::array<double, 7>;  // Monday first, sums to 1

/// Mean share of each weekday in complete weeks of history; uniform when none exist.
/// `first_weekday` is the weekday index (Monday = 0) of daily_counts[0].
WeekdayProfile weekday_profile(std::span<const double> daily_counts, int first_weekday);

/// Splits weekly totals into Monday..Sunday daily counts.
std::vector<double> disaggregate_weekly(std::span<const double> weekly_totals,
                                        const WeekdayProfile& profile);

/// lambda_E(day) = N_E / 1440 per minute.
std::vector<double> daily_arrival_rates(std::span<const double> daily_counts);

}  // namespace evqoe::sim
