#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace evqoe::forecast {

/// Multiplicative seasonal ARMA on a seasonally then fractionally differenced series, with
/// exogenous regressors and an intercept passed through the same differencing.
struct SarimaxSpec {
    int p = 0;
    double d = 0.0;
    int q = 0;
    int P = 0;
    int D = 0;
    int Q = 0;
    int s = 52;
    int n_exog = 0;
    std::size_t frac_truncation = 100;

    void validate() const;
    int n_arma() const { return p + q + P + Q; }
    /// Total estimated parameters: ARMA terms, exog coefficients and the intercept.
    int n_params() const { return n_arma() + n_exog + 1; }
    /// "(p,d,q)(P,D,Q)_s" with d printed in shortest form.
    std::string label() const;
    bool operator==(const SarimaxSpec&) const = default;
};

struct SarimaxFitOptions {
    int max_evaluations = 2000;  ///< per start
    double tolerance = 1e-8;
};

struct SarimaxFit {
    SarimaxSpec spec;
    std::vector<double> ar_coeffs;
    std::vector<double> ma_coeffs;
    std::vector<double> seasonal_ar;
    std::vector<double> seasonal_ma;
    std::vector<double> exog_coeffs;
    double intercept = 0.0;
    std::vector<double> residuals;  ///< innovations from the first usable index on
    double sigma2 = 0.0;
    std::size_t n_obs = 0;          ///< length of the differenced series
    std::size_t burn_in = 0;        ///< p + s*P
    bool converged = false;
    double css = 0.0;
    std::vector<double> start_css;  ///< objective at each multi-start's initial point
    int evaluations = 0;

    // State retained for forecasting.
    std::size_t truncation = 0;     ///< fractional lag cap actually used
    std::vector<double> history;
    std::vector<std::vector<double>> exog_history;
    std::vector<double> regression_residuals;
    std::vector<double> innovations;  ///< zero before burn_in
};

/// y: series; exog: one vector per column, each the length of y.
SarimaxFit fit_sarimax(std::span<const double> y, const std::vector<std::vector<double>>& exog,
                       const SarimaxSpec& spec, const SarimaxFitOptions& options = {});

struct ForecastResult {
    std::size_t horizon = 0;
    std::vector<double> point;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<double> sd;  ///< forecast standard deviation before clamping
    double level = 0.99;
};

/// future_exog: one vector per column with at least `horizon` values.
ForecastResult forecast(const SarimaxFit& fit, std::size_t horizon,
                        const std::vector<std::vector<double>>& future_exog, double level = 0.99);

/// psi_0..psi_{count-1} of the original-scale moving-average representation.
std::vector<double> psi_weights(const SarimaxFit& fit, std::size_t count);

/// Largest |eigenvalue| of the companion matrix of 1 - c_1 z - ... - c_k z^k
/// (below 1 iff all roots lie outside the unit circle). Zero for an empty polynomial.
double companion_radius(std::span<const double> c);

}  // namespace evqoe::forecast
