#include "evqoe/service_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <spdlog/spdlog.h>

#include "evqoe/core/errors.hpp"
#include "evqoe/core/stats.hpp"

namespace evqoe::service {

std::vector<double> DurationHistogram::density() const {
    std::vector<double> d(counts.size(), 0.0);
    if (total == 0) return d;
    const double norm = static_cast<double>(total) * bin_width;
    for (std::size_t i = 0; i < counts.size(); ++i) d[i] = static_cast<double>(counts[i]) / norm;
    return d;
}

double DurationHistogram::mean() const {
    double s = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) s += static_cast<double>(counts[i]) * midpoint(i);
    return total ? s / static_cast<double>(total) : 0.0;
}

DurationHistogram empirical_service_distribution(std::span<const double> durations,
                                                 double bin_width) {
    if (durations.empty()) throw ArgumentError("service distribution: empty sample");
    if (!(bin_width > 0.0)) throw ArgumentError("service distribution: bin width must be positive");
    double max_d = 0.0;
    for (double d : durations) {
        if (!(d > 0.0) || !std::isfinite(d)) {
            throw ArgumentError("service distribution: durations must be positive");
        }
        max_d = std::max(max_d, d);
    }
    DurationHistogram h;
    h.bin_width = bin_width;
    const auto bins = static_cast<std::size_t>(std::max(1.0, std::ceil(max_d / bin_width)));
    h.counts.assign(bins, 0);
    for (double d : durations) {
        const auto b = std::min(static_cast<std::size_t>(d / bin_width), bins - 1);
        ++h.counts[b];
    }
    h.total = static_cast<long long>(durations.size());
    return h;
}

double erlang_pdf(double x, int k, double rate) {
    if (x < 0.0) return 0.0;
    if (x == 0.0) return k == 1 ? rate : 0.0;
    const double log_pdf =
        k * std::log(rate) + (k - 1) * std::log(x) - rate * x - std::lgamma(static_cast<double>(k));
    return std::exp(log_pdf);
}

double fit_rmse(const DurationHistogram& h, int shape_k, double rate) {
    const auto dens = h.density();
    if (dens.empty()) return 0.0;
    double ss = 0.0;
    for (std::size_t i = 0; i < dens.size(); ++i) {
        const double e = dens[i] - erlang_pdf(h.midpoint(i), shape_k, rate);
        ss += e * e;
    }
    return std::sqrt(ss / static_cast<double>(dens.size()));
}

ErlangFit fit_erlang(std::span<const double> durations, const FitOptions& options) {
    if (durations.size() < options.min_samples) {
        throw InsufficientData("Erlang fit needs at least " + std::to_string(options.min_samples) +
                               " durations, got " + std::to_string(durations.size()));
    }
    if (options.k_max < 1) throw ArgumentError("Erlang fit: k_max must be >= 1");
    const auto hist = empirical_service_distribution(durations, options.bin_width);

    ErlangFit fit;
    fit.n_samples = static_cast<long long>(durations.size());
    fit.sample_mean = stats::mean(durations);
    fit.sample_var = stats::variance(durations);
    fit.moment_shape =
        fit.sample_var > 0.0
            ? std::max(1, static_cast<int>(std::lround(fit.sample_mean * fit.sample_mean /
                                                       fit.sample_var)))
            : options.k_max;

    fit.scan_rmse.reserve(static_cast<std::size_t>(options.k_max));
    double best = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= options.k_max; ++k) {
        const double rate = k / fit.sample_mean;
        const double r = fit_rmse(hist, k, rate);
        fit.scan_rmse.push_back(r);
        if (r < best) {  // strict: ties keep the smaller shape
            best = r;
            fit.shape_k = k;
            fit.rate = rate;
        }
    }
    fit.rmse = best;
    spdlog::debug("Erlang fit: moment shape {} scan shape {} rmse {:.3g}", fit.moment_shape,
                  fit.shape_k, fit.rmse);
    return fit;
}

double sample_service(int shape_k, double rate, Rng& rng) {
    double total = 0.0;
    for (int i = 0; i < shape_k; ++i) total += rng.exponential(rate);
    return total;
}

}  // namespace evqoe::service
