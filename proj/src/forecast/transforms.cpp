#include "evqoe/forecast/transforms.hpp"

#include <algorithm>
#include <cmath>

#include "evqoe/core/errors.hpp"

namespace evqoe::forecast {

std::vector<double> frac_weights(double d, std::size_t count) {
    std::vector<double> w(count, 0.0);
    if (count == 0) return w;
    w[0] = 1.0;
    for (std::size_t j = 1; j < count; ++j) {
        w[j] = w[j - 1] * (static_cast<double>(j) - 1.0 - d) / static_cast<double>(j);
    }
    return w;
}

std::size_t frac_burn_in(double d) {
    return d == 0.0 ? 0 : static_cast<std::size_t>(std::ceil(d));
}

std::vector<double> frac_diff(std::span<const double> y, double d, std::size_t truncation) {
    if (d < 0.0) throw ArgumentError("frac_diff: d must be non-negative");
    const std::size_t burn = frac_burn_in(d);
    if (y.size() <= burn) throw ArgumentError("frac_diff: series too short for burn-in");
    if (d == 0.0) return {y.begin(), y.end()};
    const std::size_t J = effective_truncation(y.size(), truncation);
    const auto pi = frac_weights(d, J + 1);
    std::vector<double> out;
    out.reserve(y.size() - burn);
    for (std::size_t t = burn; t < y.size(); ++t) {
        double acc = 0.0;
        const std::size_t top = std::min(t, J);
        for (std::size_t j = 0; j <= top; ++j) acc += pi[j] * y[t - j];
        out.push_back(acc);
    }
    return out;
}

std::vector<double> seasonal_diff(std::span<const double> y, int D, int s) {
    if (D < 0) throw ArgumentError("seasonal_diff: D must be non-negative");
    if (D == 0) return {y.begin(), y.end()};
    if (s < 1) throw ArgumentError("seasonal_diff: period must be positive");
    const auto lag = static_cast<std::size_t>(s);
    if (y.size() <= static_cast<std::size_t>(D) * lag) {
        throw ArgumentError("seasonal_diff: series shorter than D*s");
    }
    std::vector<double> cur(y.begin(), y.end());
    for (int r = 0; r < D; ++r) {
        std::vector<double> next(cur.size() - lag);
        for (std::size_t t = lag; t < cur.size(); ++t) next[t - lag] = cur[t] - cur[t - lag];
        cur = std::move(next);
    }
    return cur;
}

std::vector<double> invert_transforms(std::span<const double> future, std::span<const double> history,
                                      double d, int D, int s, std::size_t truncation) {
    if (d < 0.0) throw ArgumentError("invert_transforms: d must be non-negative");
    if (D < 0 || (D > 0 && s < 1)) throw ArgumentError("invert_transforms: bad seasonal order");
    const std::size_t seasonal_len = static_cast<std::size_t>(D) * static_cast<std::size_t>(std::max(s, 0));
    const std::size_t need = (d == 0.0 ? 0 : truncation) + seasonal_len;
    if (history.size() < need || history.size() <= seasonal_len) {
        throw ArgumentError("invert_transforms: insufficient history to seed the inversion");
    }

    // levels[r] = (1 - B^s)^r applied to the history.
    std::vector<std::vector<double>> levels;
    levels.emplace_back(history.begin(), history.end());
    for (int r = 0; r < D; ++r) levels.push_back(seasonal_diff(levels.back(), 1, s));

    // Inverse fractional filter on the innermost level.
    std::vector<double>& z = levels.back();
    if (d == 0.0) {
        z.insert(z.end(), future.begin(), future.end());
    } else {
        const auto pi = frac_weights(d, truncation + 1);
        for (double w : future) {
            const std::size_t t = z.size();
            const std::size_t top = std::min(t, truncation);
            double acc = w;
            for (std::size_t j = 1; j <= top; ++j) acc -= pi[j] * z[t - j];
            z.push_back(acc);
        }
    }

    // Seasonal integration, innermost level outwards.
    const auto lag = static_cast<std::size_t>(std::max(s, 1));
    for (int r = D; r > 0; --r) {
        const auto& inner = levels[static_cast<std::size_t>(r)];
        auto& outer = levels[static_cast<std::size_t>(r - 1)];
        const std::size_t base = outer.size();
        for (std::size_t h = 0; h < future.size(); ++h) {
            const std::size_t t = base + h;
            outer.push_back(inner[t - lag] + outer[t - lag]);
        }
    }
    return {levels.front().end() - static_cast<std::ptrdiff_t>(future.size()), levels.front().end()};
}

}  // namespace evqoe::forecast
