#include "evqoe/forecast/grid_search.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include <fmt/format.h>

#include "evqoe/core/errors.hpp"
#include "evqoe/forecast/accuracy.hpp"

namespace evqoe::forecast {

std::vector<SarimaxSpec> SarimaxGrid::expand(int n_exog) const {
    std::vector<SarimaxSpec> out;
    for (int pp : p)
        for (double dd : d)
            for (int qq : q)
                for (int PP : P)
                    for (int DD : D)
                        for (int QQ : Q) {
                            SarimaxSpec sp;
                            sp.p = pp;
                            sp.d = dd;
                            sp.q = qq;
                            sp.P = PP;
                            sp.D = DD;
                            sp.Q = QQ;
                            sp.s = s;
                            sp.n_exog = n_exog;
                            sp.frac_truncation = frac_truncation;
                            out.push_back(sp);
                        }
    return out;
}

double validation_mape(std::span<const double> y, const std::vector<std::vector<double>>& exog,
                       const SarimaxSpec& spec, std::size_t V, const SarimaxFitOptions& options) {
    if (V == 0 || V >= y.size()) throw ArgumentError("validation_mape: bad validation length");
    const std::size_t n_train = y.size() - V;
    std::vector<std::vector<double>> train_x, valid_x;
    for (const auto& col : exog) {
        train_x.emplace_back(col.begin(), col.begin() + static_cast<std::ptrdiff_t>(n_train));
        valid_x.emplace_back(col.begin() + static_cast<std::ptrdiff_t>(n_train), col.end());
    }
    const auto fit = fit_sarimax(y.first(n_train), train_x, spec, options);
    if (!fit.converged) throw FitError("optimizer reached the evaluation cap");
    const auto fc = forecast(fit, V, valid_x);
    const auto acc = accuracy(y.subspan(n_train), fc.point);
    if (!acc.mape) throw FitError("validation MAPE undefined (all actuals zero)");
    return *acc.mape;
}

GridSearchResult grid_search(std::span<const double> y, const std::vector<std::vector<double>>& exog,
                             const SarimaxGrid& grid, std::size_t V, const SarimaxFitOptions& options,
                             unsigned threads) {
    if (V < 52) throw ArgumentError("grid_search: need at least 52 validation weeks");
    if (V >= y.size()) throw ArgumentError("grid_search: validation split leaves no training data");
    const auto specs = grid.expand(static_cast<int>(exog.size()));
    if (specs.empty()) throw ArgumentError("grid_search: empty grid");

    std::vector<LeaderboardEntry> board(specs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < specs.size(); i = next++) {
            auto& e = board[i];
            e.spec = specs[i];
            try {
                e.mape = validation_mape(y, exog, specs[i], V, options);
                e.converged = true;
            } catch (const std::exception& ex) {
                e.failure = ex.what();
            }
        }
    };
    unsigned n_threads = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, specs.size()));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }

    GridSearchResult res;
    const LeaderboardEntry* best = nullptr;
    for (const auto& e : board) {
        if (!e.mape) continue;
        if (!best || *e.mape < *best->mape ||
            (*e.mape == *best->mape && e.spec.n_params() < best->spec.n_params())) {
            best = &e;
        }
    }
    if (!best) {
        std::string reasons;
        for (const auto& e : board) reasons += fmt::format("\n  {}: {}", e.spec.label(), e.failure);
        throw FitError("grid_search: every fit failed" + reasons);
    }
    res.best = best->spec;
    res.best_mape = *best->mape;
    res.leaderboard = std::move(board);
    return res;
}

std::vector<double> extrapolate_linear(std::span<const double> h, std::size_t horizon) {
    if (h.empty()) throw ArgumentError("extrapolate_linear: empty history");
    const double n = static_cast<double>(h.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double x = static_cast<double>(i);
        sx += x;
        sy += h[i];
        sxx += x * x;
        sxy += x * h[i];
    }
    const double den = n * sxx - sx * sx;
    const double slope = den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
    const double icpt = (sy - slope * sx) / n;
    std::vector<double> out(horizon);
    for (std::size_t k = 0; k < horizon; ++k) out[k] = icpt + slope * (n + static_cast<double>(k));
    return out;
}

}  // namespace evqoe::forecast
