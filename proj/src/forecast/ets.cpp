#include "evqoe/forecast/ets.hpp"

#include <limits>

#include "evqoe/core/errors.hpp"

namespace evqoe::forecast {

namespace {

std::vector<double> smoothing_grid() {
    std::vector<double> g;
    for (int i = 0; i < 15; ++i) g.push_back(0.01 + 0.07 * i);
    return g;
}

struct Run {
    double level, trend, sse;
    std::vector<double> season;
};

Run run(std::span<const double> y, int m, double a, double b, double g) {
    Run r{};
    std::size_t first;
    if (m == 0) {
        r.level = y[0];
        r.trend = y[1] - y[0];
        first = 1;
    } else {
        const auto M = static_cast<std::size_t>(m);
        double m1 = 0.0, m2 = 0.0;
        for (std::size_t i = 0; i < M; ++i) {
            m1 += y[i];
            m2 += y[M + i];
        }
        m1 /= m;
        m2 /= m;
        r.level = m1;
        r.trend = (m2 - m1) / m;
        r.season.resize(M);
        for (std::size_t i = 0; i < M; ++i) r.season[i] = y[i] - (m1 + (static_cast<double>(i) - (m - 1) / 2.0) * r.trend);
        // State at the end of the first period.
        r.level = m1 + (m - 1) / 2.0 * r.trend;
        first = M;
    }
    r.sse = 0.0;
    for (std::size_t t = first; t < y.size(); ++t) {
        const double s = m ? r.season[t % static_cast<std::size_t>(m)] : 0.0;
        const double pred = r.level + r.trend + s;
        const double err = y[t] - pred;
        r.sse += err * err;
        const double prev_level = r.level;
        r.level = a * (y[t] - s) + (1.0 - a) * (r.level + r.trend);
        r.trend = b * (r.level - prev_level) + (1.0 - b) * r.trend;
        if (m) r.season[t % static_cast<std::size_t>(m)] = g * (y[t] - r.level) + (1.0 - g) * s;
    }
    return r;
}

}  // namespace

std::vector<double> EtsFit::forecast(std::size_t horizon) const {
    std::vector<double> out(horizon);
    for (std::size_t h = 1; h <= horizon; ++h) {
        double v = level + static_cast<double>(h) * trend;
        if (period) v += season[(n_obs - 1 + h) % static_cast<std::size_t>(period)];
        out[h - 1] = v;
    }
    return out;
}

EtsFit fit_ets(std::span<const double> y, int period) {
    if (period < 0 || period == 1) throw ArgumentError("fit_ets: period must be 0 or at least 2");
    if (period == 0 && y.size() < 3) throw ArgumentError("fit_ets: need at least 3 observations");
    if (period > 0 && y.size() < 2 * static_cast<std::size_t>(period)) {
        throw ArgumentError("fit_ets: seasonal fit needs at least two full periods");
    }
    const auto grid = smoothing_grid();
    const std::vector<double> no_gamma{0.0};
    const auto& gammas = period ? grid : no_gamma;

    EtsFit best;
    best.sse = std::numeric_limits<double>::infinity();
    for (double a : grid) {
        for (double b : grid) {
            for (double g : gammas) {
                const Run r = run(y, period, a, b, g);
                if (r.sse < best.sse) {
                    best.alpha = a;
                    best.beta = b;
                    best.gamma = g;
                    best.level = r.level;
                    best.trend = r.trend;
                    best.season = r.season;
                    best.sse = r.sse;
                }
            }
        }
    }
    best.period = period;
    best.n_obs = y.size();
    return best;
}

}  // namespace evqoe::forecast
