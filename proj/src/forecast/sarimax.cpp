#include "evqoe/forecast/sarimax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "evqoe/core/csv.hpp"
#include "evqoe/core/errors.hpp"
#include "evqoe/core/stats.hpp"
#include "evqoe/forecast/optimizer.hpp"
#include "evqoe/forecast/transforms.hpp"

namespace evqoe::forecast {

void SarimaxSpec::validate() const {
    if (p < 0 || q < 0 || P < 0 || D < 0 || Q < 0 || n_exog < 0) {
        throw ArgumentError("SarimaxSpec: orders must be non-negative");
    }
    if (!(d >= 0.0 && d <= 1.5)) throw ArgumentError("SarimaxSpec: d must lie in [0, 1.5]");
    if (n_arma() > 6) throw ArgumentError("SarimaxSpec: p+q+P+Q must not exceed 6");
    if (s < 1) throw ArgumentError("SarimaxSpec: seasonal period must be positive");
    if (P + D + Q > 0 && s < 2) throw ArgumentError("SarimaxSpec: seasonal terms need s >= 2");
}

std::string SarimaxSpec::label() const {
    return fmt::format("({},{},{})({},{},{})_{}", p, csv::format_double(d), q, P, D, Q, s);
}

double companion_radius(std::span<const double> c) {
    if (c.empty()) return 0.0;
    const auto k = static_cast<Eigen::Index>(c.size());
    if (k == 1) return std::abs(c[0]);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index j = 0; j < k; ++j) M(0, j) = c[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 1; i < k; ++i) M(i, i - 1) = 1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
    double r = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) r = std::max(r, std::abs(es.eigenvalues()(i)));
    return r;
}

namespace {

constexpr double kRadiusLimit = 1.0 - 1e-6;
constexpr double kPenalty = 1e20;

struct Lag {
    std::size_t lag;
    double coef;
};

struct Arma {
    std::vector<double> phi, theta, Phi, Theta;
};

Arma unpack(const std::vector<double>& x, const SarimaxSpec& sp) {
    Arma a;
    auto it = x.begin();
    a.phi.assign(it, it + sp.p);
    it += sp.p;
    a.theta.assign(it, it + sp.q);
    it += sp.q;
    a.Phi.assign(it, it + sp.P);
    it += sp.P;
    a.Theta.assign(it, it + sp.Q);
    return a;
}

// Dense coefficients c_1..c_m of a product polynomial, c[0] unused.
// AR: (1 - sum phi B^i)(1 - sum Phi B^{sk}) = 1 - sum c_i B^i.
std::vector<double> ar_full(const Arma& a, int s) {
    const std::size_t m = a.phi.size() + a.Phi.size() * static_cast<std::size_t>(s);
    std::vector<double> c(m + 1, 0.0);
    for (std::size_t i = 0; i < a.phi.size(); ++i) c[i + 1] += a.phi[i];
    for (std::size_t k = 0; k < a.Phi.size(); ++k) {
        const std::size_t sk = (k + 1) * static_cast<std::size_t>(s);
        c[sk] += a.Phi[k];
        for (std::size_t i = 0; i < a.phi.size(); ++i) c[sk + i + 1] -= a.phi[i] * a.Phi[k];
    }
    return c;
}

// MA: (1 + sum theta B^j)(1 + sum Theta B^{sk}) = 1 + sum c_j B^j.
std::vector<double> ma_full(const Arma& a, int s) {
    const std::size_t m = a.theta.size() + a.Theta.size() * static_cast<std::size_t>(s);
    std::vector<double> c(m + 1, 0.0);
    for (std::size_t j = 0; j < a.theta.size(); ++j) c[j + 1] += a.theta[j];
    for (std::size_t k = 0; k < a.Theta.size(); ++k) {
        const std::size_t sk = (k + 1) * static_cast<std::size_t>(s);
        c[sk] += a.Theta[k];
        for (std::size_t j = 0; j < a.theta.size(); ++j) c[sk + j + 1] += a.theta[j] * a.Theta[k];
    }
    return c;
}

std::vector<Lag> sparse(const std::vector<double>& c) {
    std::vector<Lag> out;
    for (std::size_t i = 1; i < c.size(); ++i) {
        if (c[i] != 0.0) out.push_back({i, c[i]});
    }
    return out;
}

double excess_radius(const Arma& a) {
    auto neg = [](const std::vector<double>& v) {
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) r[i] = -v[i];
        return r;
    };
    const double r = std::max({companion_radius(a.phi), companion_radius(a.Phi),
                               companion_radius(neg(a.theta)), companion_radius(neg(a.Theta))});
    return r < kRadiusLimit ? 0.0 : r - kRadiusLimit + 1e-12;
}

// Innovations e_t for t >= t0 with e_t = 0 before t0; returns the sum of squares.
double css_residuals(const std::vector<double>& u, const std::vector<Lag>& ar, const std::vector<Lag>& ma,
                     std::size_t t0, std::vector<double>& e) {
    e.assign(u.size(), 0.0);
    double ss = 0.0;
    for (std::size_t t = t0; t < u.size(); ++t) {
        double v = u[t];
        for (const auto& l : ar) v -= l.coef * u[t - l.lag];
        for (const auto& l : ma) {
            if (l.lag <= t) v -= l.coef * e[t - l.lag];
        }
        e[t] = v;
        ss += v * v;
    }
    return ss;
}

// Ones column after the fractional filter with lag cap J: S_t = sum_{j<=min(t,J)} pi_j.
double frac_intercept_gain(const std::vector<double>& pi, std::size_t t) {
    double acc = 0.0;
    const std::size_t top = std::min(t, pi.size() - 1);
    for (std::size_t j = 0; j <= top; ++j) acc += pi[j];
    return acc;
}

// Applies seasonal differencing then the fractional filter with a fixed lag cap to `full`,
// returning filtered values at z-indices [from, z.size()).
std::vector<double> filter_tail(const std::vector<double>& full, const SarimaxSpec& sp,
                                const std::vector<double>& pi, std::size_t from) {
    const auto z = seasonal_diff(full, sp.D, sp.s);
    std::vector<double> out;
    for (std::size_t t = from; t < z.size(); ++t) {
        double acc = 0.0;
        const std::size_t top = std::min(t, pi.size() - 1);
        for (std::size_t j = 0; j <= top; ++j) acc += pi[j] * z[t - j];
        out.push_back(acc);
    }
    return out;
}

std::vector<double> pi_weights(const SarimaxSpec& sp, std::size_t J) {
    return sp.d == 0.0 ? std::vector<double>{1.0} : frac_weights(sp.d, J + 1);
}

}  // namespace

SarimaxFit fit_sarimax(std::span<const double> y, const std::vector<std::vector<double>>& exog,
                       const SarimaxSpec& spec, const SarimaxFitOptions& options) {
    spec.validate();
    if (static_cast<int>(exog.size()) != spec.n_exog) {
        throw ArgumentError(fmt::format("fit_sarimax: spec expects {} exog columns, got {}", spec.n_exog, exog.size()));
    }
    for (const auto& col : exog) {
        if (col.size() != y.size()) throw ArgumentError("fit_sarimax: exog column length differs from series");
    }
    const std::size_t seasonal_len = static_cast<std::size_t>(spec.D) * static_cast<std::size_t>(spec.s);
    const std::size_t burn = frac_burn_in(spec.d);
    if (y.size() <= seasonal_len + burn) throw ArgumentError("fit_sarimax: series too short for differencing");

    const auto z = seasonal_diff(y, spec.D, spec.s);
    const std::size_t J = effective_truncation(z.size(), spec.frac_truncation);
    const auto w = frac_diff(z, spec.d, spec.frac_truncation);
    const std::size_t n = w.size();
    if (n < 3 * static_cast<std::size_t>(spec.n_params())) {
        throw ArgumentError(fmt::format("fit_sarimax: {} differenced observations, need at least {}", n,
                                        3 * spec.n_params()));
    }
    const std::size_t t0 = static_cast<std::size_t>(spec.p) + static_cast<std::size_t>(spec.P * spec.s);
    if (n <= t0 + static_cast<std::size_t>(spec.n_arma())) {
        throw ArgumentError("fit_sarimax: series too short for the autoregressive burn-in");
    }

    // Regression on the differenced scale.
    const auto pi = pi_weights(spec, J);
    const auto k = static_cast<Eigen::Index>(1 + exog.size());
    Eigen::MatrixXd X(static_cast<Eigen::Index>(n), k);
    for (std::size_t r = 0; r < n; ++r) X(static_cast<Eigen::Index>(r), 0) = frac_intercept_gain(pi, r + burn);
    for (std::size_t c = 0; c < exog.size(); ++c) {
        const auto xw = frac_diff(seasonal_diff(exog[c], spec.D, spec.s), spec.d, spec.frac_truncation);
        for (std::size_t r = 0; r < n; ++r) X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c + 1)) = xw[r];
    }
    Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(n));
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < k) throw FitError("fit_sarimax: regression design is rank deficient");
    const Eigen::VectorXd beta = qr.solve(b);
    const Eigen::VectorXd uv = b - X * beta;
    std::vector<double> u(uv.data(), uv.data() + uv.size());

    SarimaxFit fit;
    fit.spec = spec;
    fit.intercept = beta(0);
    for (Eigen::Index c = 1; c < k; ++c) fit.exog_coeffs.push_back(beta(c));
    fit.n_obs = n;
    fit.burn_in = t0;
    fit.truncation = J;
    fit.history.assign(y.begin(), y.end());
    fit.exog_history = exog;
    fit.regression_residuals = u;

    // Conditional sum of squares over the ARMA parameters.
    std::vector<double> scratch;
    auto objective = [&](const std::vector<double>& x) {
        const Arma a = unpack(x, spec);
        const double excess = excess_radius(a);
        if (excess > 0.0) return kPenalty * (1.0 + excess);
        return css_residuals(u, sparse(ar_full(a, spec.s)), sparse(ma_full(a, spec.s)), t0, scratch);
    };

    const std::size_t dim = static_cast<std::size_t>(spec.n_arma());
    auto start_point = [&](double ar_c, double ma_c) {
        std::vector<double> x;
        auto push = [&x](int order, double c) {
            for (int i = 0; i < order; ++i) x.push_back(c / order);
        };
        push(spec.p, ar_c);
        push(spec.q, ma_c);
        push(spec.P, ar_c);
        push(spec.Q, ma_c);
        return x;
    };
    const std::vector<std::vector<double>> starts = {
        start_point(0.0, 0.0), start_point(0.2, 0.2), start_point(-0.2, -0.2),
        start_point(0.5, -0.5), start_point(-0.5, 0.5)};

    SimplexOptions so;
    so.max_evaluations = options.max_evaluations;
    so.tolerance = options.tolerance;
    SimplexResult best;
    best.value = std::numeric_limits<double>::infinity();
    for (const auto& st : starts) {
        auto r = nelder_mead(objective, st, so);
        fit.start_css.push_back(r.initial_value);
        fit.evaluations += r.evaluations;
        if (r.value < best.value) best = std::move(r);
        if (dim == 0) break;
    }
    if (!(best.value < kPenalty)) throw FitError("fit_sarimax: no feasible starting point");

    const Arma a = unpack(best.x, spec);
    fit.ar_coeffs = a.phi;
    fit.ma_coeffs = a.theta;
    fit.seasonal_ar = a.Phi;
    fit.seasonal_ma = a.Theta;
    fit.css = css_residuals(u, sparse(ar_full(a, spec.s)), sparse(ma_full(a, spec.s)), t0, fit.innovations);
    fit.residuals.assign(fit.innovations.begin() + static_cast<std::ptrdiff_t>(t0), fit.innovations.end());
    const double dof = static_cast<double>(fit.residuals.size()) - static_cast<double>(spec.n_params());
    fit.sigma2 = fit.css / std::max(1.0, dof);
    fit.converged = best.converged;
    return fit;
}

std::vector<double> psi_weights(const SarimaxFit& fit, std::size_t count) {
    const auto& sp = fit.spec;
    const Arma a{fit.ar_coeffs, fit.ma_coeffs, fit.seasonal_ar, fit.seasonal_ma};
    const auto arc = ar_full(a, sp.s);
    const auto mac = ma_full(a, sp.s);

    // den(B) = a(B) * pi_J(B) * (1 - B^s)^D, truncated to `count` terms.
    auto mul = [count](const std::vector<double>& x, const std::vector<double>& y) {
        std::vector<double> r(std::min(count, x.size() + y.size() - 1), 0.0);
        for (std::size_t i = 0; i < x.size() && i < r.size(); ++i) {
            if (x[i] == 0.0) continue;
            for (std::size_t j = 0; j < y.size() && i + j < r.size(); ++j) r[i + j] += x[i] * y[j];
        }
        return r;
    };
    std::vector<double> den(arc.size());
    den[0] = 1.0;
    for (std::size_t i = 1; i < arc.size(); ++i) den[i] = -arc[i];
    den = mul(den, pi_weights(sp, fit.truncation));
    std::vector<double> sdiff(static_cast<std::size_t>(sp.s) + 1, 0.0);
    sdiff[0] = 1.0;
    sdiff.back() = -1.0;
    for (int r = 0; r < sp.D; ++r) den = mul(den, sdiff);

    std::vector<double> psi(count, 0.0);
    for (std::size_t h = 0; h < count; ++h) {
        double v = h == 0 ? 1.0 : (h < mac.size() ? mac[h] : 0.0);
        for (std::size_t i = 1; i <= h && i < den.size(); ++i) v -= den[i] * psi[h - i];
        psi[h] = v;
    }
    return psi;
}

ForecastResult forecast(const SarimaxFit& fit, std::size_t horizon,
                        const std::vector<std::vector<double>>& future_exog, double level) {
    if (!(level > 0.0 && level < 1.0)) throw ArgumentError("forecast: level must lie in (0, 1)");
    const auto& sp = fit.spec;
    if (static_cast<int>(future_exog.size()) != sp.n_exog) {
        throw MissingExogData(fmt::format("forecast: expected {} future exog columns, got {}", sp.n_exog,
                                          future_exog.size()));
    }
    for (const auto& col : future_exog) {
        if (col.size() < horizon) {
            throw MissingExogData(fmt::format("forecast: future exog has {} rows, horizon is {}", col.size(), horizon));
        }
    }
    ForecastResult out;
    out.horizon = horizon;
    out.level = level;
    if (horizon == 0) return out;

    const std::size_t seasonal_len = static_cast<std::size_t>(sp.D) * static_cast<std::size_t>(sp.s);
    const std::size_t z_len = fit.history.size() - seasonal_len;
    const auto pi = pi_weights(sp, fit.truncation);

    // Deterministic part on the differenced scale.
    std::vector<double> wf(horizon);
    for (std::size_t h = 0; h < horizon; ++h) wf[h] = fit.intercept * frac_intercept_gain(pi, z_len + h);
    for (std::size_t c = 0; c < future_exog.size(); ++c) {
        std::vector<double> full = fit.exog_history[c];
        full.insert(full.end(), future_exog[c].begin(), future_exog[c].begin() + static_cast<std::ptrdiff_t>(horizon));
        const auto tail = filter_tail(full, sp, pi, z_len);
        for (std::size_t h = 0; h < horizon; ++h) wf[h] += fit.exog_coeffs[c] * tail[h];
    }

    // ARMA recursion with future innovations at zero.
    const Arma a{fit.ar_coeffs, fit.ma_coeffs, fit.seasonal_ar, fit.seasonal_ma};
    const auto ar = sparse(ar_full(a, sp.s));
    const auto ma = sparse(ma_full(a, sp.s));
    std::vector<double> u = fit.regression_residuals;
    std::vector<double> e = fit.innovations;
    const std::size_t n = u.size();
    for (std::size_t h = 0; h < horizon; ++h) {
        const std::size_t t = n + h;
        double v = 0.0;
        for (const auto& l : ar) {
            if (l.lag <= t) v += l.coef * u[t - l.lag];
        }
        for (const auto& l : ma) {
            if (l.lag <= t) v += l.coef * e[t - l.lag];
        }
        u.push_back(v);
        e.push_back(0.0);
        wf[h] += v;
    }

    const auto point = invert_transforms(wf, fit.history, sp.d, sp.D, sp.s, fit.truncation);
    const auto psi = psi_weights(fit, horizon);
    const double z = stats::z_for_level(level);
    double acc = 0.0;
    for (std::size_t h = 0; h < horizon; ++h) {
        acc += psi[h] * psi[h];
        const double sd = std::sqrt(fit.sigma2 * acc);
        out.sd.push_back(sd);
        out.point.push_back(std::max(0.0, point[h]));
        out.lower.push_back(std::max(0.0, point[h] - z * sd));
        out.upper.push_back(std::max(0.0, point[h] + z * sd));
    }
    return out;
}

}  // namespace evqoe::forecast
