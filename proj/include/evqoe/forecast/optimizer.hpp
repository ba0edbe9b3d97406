#pragma once

#include <functional>
#include <vector>

namespace evqoe::forecast {

struct SimplexOptions {
    int max_evaluations = 2000;
    double tolerance = 1e-8;  ///< relative spread of objective values across the simplex
    double initial_step = 0.1;
};

struct SimplexResult {
    std::vector<double> x;
    double value = 0.0;
    double initial_value = 0.0;
    int evaluations = 0;
    bool converged = false;
};

/// Nelder-Mead minimization. A zero-dimensional problem evaluates f once and converges.
SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> start, const SimplexOptions& options = {});

}  // namespace evqoe::forecast
