#include "evqoe/forecast/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace evqoe::forecast {

SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> start, const SimplexOptions& opt) {
    const std::size_t n = start.size();
    SimplexResult res;
    res.initial_value = f(start);
    res.evaluations = 1;
    if (n == 0) {
        res.x = std::move(start);
        res.value = res.initial_value;
        res.converged = true;
        return res;
    }

    std::vector<std::vector<double>> pts(n + 1, start);
    std::vector<double> val(n + 1);
    val[0] = res.initial_value;
    for (std::size_t i = 0; i < n; ++i) {
        pts[i + 1][i] += opt.initial_step;
        val[i + 1] = f(pts[i + 1]);
        ++res.evaluations;
    }

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), trial(n), trial2(n);
    auto eval = [&](const std::vector<double>& x) {
        ++res.evaluations;
        return f(x);
    };

    while (true) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return val[a] < val[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[n - 1];

        const double spread = val[worst] - val[best];
        if (spread <= opt.tolerance * std::max(std::abs(val[best]), 1e-12)) {
            res.converged = true;
            break;
        }
        if (res.evaluations >= opt.max_evaluations) break;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[i][j];
        }
        for (double& c : centroid) c /= static_cast<double>(n);

        for (std::size_t j = 0; j < n; ++j) trial[j] = centroid[j] + (centroid[j] - pts[worst][j]);
        const double fr = eval(trial);
        if (fr < val[best]) {
            for (std::size_t j = 0; j < n; ++j) trial2[j] = centroid[j] + 2.0 * (centroid[j] - pts[worst][j]);
            const double fe = eval(trial2);
            if (fe < fr) {
                pts[worst] = trial2;
                val[worst] = fe;
            } else {
                pts[worst] = trial;
                val[worst] = fr;
            }
            continue;
        }
        if (fr < val[second]) {
            pts[worst] = trial;
            val[worst] = fr;
            continue;
        }
        const bool outside = fr < val[worst];
        for (std::size_t j = 0; j < n; ++j) {
            trial2[j] = outside ? centroid[j] + 0.5 * (trial[j] - centroid[j])
                                : centroid[j] + 0.5 * (pts[worst][j] - centroid[j]);
        }
        const double fc = eval(trial2);
        if (fc < (outside ? fr : val[worst])) {
            pts[worst] = trial2;
            val[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == best) continue;
            for (std::size_t j = 0; j < n; ++j) pts[i][j] = pts[best][j] + 0.5 * (pts[i][j] - pts[best][j]);
            val[i] = eval(pts[i]);
        }
    }

    const auto it = std::min_element(val.begin(), val.end());
    res.value = *it;
    res.x = pts[static_cast<std::size_t>(it - val.begin())];
    return res;
}

}  // namespace evqoe::forecast
