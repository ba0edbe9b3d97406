#include "evqoe/forecast/diagnostics.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "evqoe/core/errors.hpp"

namespace evqoe::forecast {

std::vector<double> acf(std::span<const double> y, std::size_t max_lag) {
    if (y.size() <= max_lag) throw ArgumentError("acf: series length must exceed max_lag");
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double denom = 0.0;
    for (double v : y) denom += (v - mean) * (v - mean);
    if (!(denom > 0.0)) throw ArgumentError("acf: series has zero variance");
    std::vector<double> rho(max_lag + 1);
    rho[0] = 1.0;
    for (std::size_t h = 1; h <= max_lag; ++h) {
        double num = 0.0;
        for (std::size_t t = 0; t + h < y.size(); ++t) num += (y[t] - mean) * (y[t + h] - mean);
        rho[h] = num / denom;
    }
    return rho;
}

std::vector<double> pacf(std::span<const double> y, std::size_t max_lag) {
    const auto rho = acf(y, max_lag);
    std::vector<double> out;
    out.reserve(max_lag);
    std::vector<double> phi;  // phi_{k,1..k}
    for (std::size_t k = 1; k <= max_lag; ++k) {
        double num = rho[k];
        double den = 1.0;
        for (std::size_t j = 1; j < k; ++j) {
            num -= phi[j - 1] * rho[k - j];
            den -= phi[j - 1] * rho[j];
        }
        const double kk = den != 0.0 ? num / den : 0.0;
        std::vector<double> next(k);
        for (std::size_t j = 1; j < k; ++j) next[j - 1] = phi[j - 1] - kk * phi[k - j - 1];
        next[k - 1] = kk;
        phi = std::move(next);
        out.push_back(kk);
    }
    return out;
}

AdfCriticalValues adf_critical_values(std::size_t n) {
    // Response-surface coefficients, constant case, one regressor.
    const double T = static_cast<double>(n);
    auto cv = [T](double b0, double b1, double b2, double b3) {
        return b0 + b1 / T + b2 / (T * T) + b3 / (T * T * T);
    };
    return {cv(-3.43035, -6.5393, -16.786, -79.433), cv(-2.86154, -2.8903, -4.234, -40.040),
            cv(-2.56677, -1.5384, -2.809, 0.0)};
}

namespace {

struct OlsOut {
    double ssr = 0.0;
    double gamma = 0.0;
    double gamma_se = 0.0;
};

// Regress dy[t] on [1, y[t-1], dy[t-1..t-L]] for t in [first, dy.size()); dy[t] = y[t+1]-y[t].
OlsOut adf_regression(const std::vector<double>& y, const std::vector<double>& dy, std::size_t L,
                      std::size_t first) {
    const std::size_t n = dy.size() - first;
    const std::size_t k = 2 + L;
    if (n <= k) throw NumericalError("adf_test: too few observations for the regression");
    Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    Eigen::VectorXd b(static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t t = first + r;
        const auto R = static_cast<Eigen::Index>(r);
        X(R, 0) = 1.0;
        X(R, 1) = y[t];
        for (std::size_t i = 1; i <= L; ++i) X(R, static_cast<Eigen::Index>(1 + i)) = dy[t - i];
        b(R) = dy[t];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < static_cast<Eigen::Index>(k)) {
        throw NumericalError("adf_test: singular regression design");
    }
    const Eigen::VectorXd beta = qr.solve(b);
    const Eigen::VectorXd resid = b - X * beta;
    OlsOut out;
    out.ssr = resid.squaredNorm();
    out.gamma = beta(1);
    const double s2 = out.ssr / static_cast<double>(n - k);
    const Eigen::MatrixXd xtx = X.transpose() * X;
    const Eigen::MatrixXd inv = xtx.ldlt().solve(Eigen::MatrixXd::Identity(xtx.rows(), xtx.cols()));
    const double var = s2 * inv(1, 1);
    if (!(var > 0.0) || !std::isfinite(var)) {
        throw NumericalError("adf_test: degenerate coefficient variance");
    }
    out.gamma_se = std::sqrt(var);
    return out;
}

}  // namespace

AdfResult adf_test(std::span<const double> series, std::size_t max_lags) {
    if (series.size() < 20 + max_lags) throw ArgumentError("adf_test: series length must be >= 20 + max_lags");
    std::vector<double> y(series.begin(), series.end());
    std::vector<double> dy(y.size() - 1);
    for (std::size_t t = 0; t + 1 < y.size(); ++t) dy[t] = y[t + 1] - y[t];

    std::size_t best_lag = 0;
    double best_aic = std::numeric_limits<double>::infinity();
    for (std::size_t L = 0; L <= max_lags; ++L) {
        const auto fit = adf_regression(y, dy, L, max_lags);
        const double n = static_cast<double>(dy.size() - max_lags);
        const double aic = n * std::log(fit.ssr / n) + 2.0 * static_cast<double>(2 + L);
        if (aic < best_aic) {
            best_aic = aic;
            best_lag = L;
        }
    }
    const auto fit = adf_regression(y, dy, best_lag, best_lag);
    AdfResult r;
    r.statistic = fit.gamma / fit.gamma_se;
    r.lags_used = best_lag;
    r.n_obs = dy.size() - best_lag;
    r.critical = adf_critical_values(r.n_obs);
    r.reject_1 = r.statistic < r.critical.one_percent;
    r.reject_5 = r.statistic < r.critical.five_percent;
    r.reject_10 = r.statistic < r.critical.ten_percent;
    return r;
}

}  // namespace evqoe::forecast
