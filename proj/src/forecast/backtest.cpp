#include "evqoe/forecast/backtest.hpp"

#include <functional>

#include "evqoe/core/errors.hpp"
#include "evqoe/core/time.hpp"
#include "evqoe/forecast/ets.hpp"

namespace evqoe::forecast {

BacktestModels default_models(const SarimaxSpec& seasonal) {
    BacktestModels m;
    m.sarimax = seasonal;
    m.sarima = seasonal;
    m.sarima.n_exog = 0;
    m.arima = m.sarima;
    m.arima.P = m.arima.D = m.arima.Q = 0;
    m.ets_period = seasonal.s;
    return m;
}

BacktestResult backtest(const features::WeeklySeries& weekly, std::size_t train_weeks, std::size_t test_weeks,
                        const BacktestModels& models, const std::vector<ExternalPredictions>& external) {
    if (train_weeks == 0 || test_weeks == 0 || train_weeks + test_weeks > weekly.size()) {
        throw ArgumentError("backtest: train/test split exceeds the series");
    }
    const auto train = weekly.head(train_weeks);
    const auto test = weekly.slice(train_weeks, test_weeks);

    BacktestResult res;
    res.actual = test.y;
    for (const auto& w : test.week_starts) res.test_weeks.push_back(format_date(w));

    auto run = [&](const std::string& name, const std::function<std::vector<double>()>& predict) {
        BacktestRow row{name, std::nullopt, {}};
        try {
            auto pred = predict();
            row.report = accuracy(res.actual, pred);
            res.predictions[name] = std::move(pred);
        } catch (const std::exception& e) {
            row.failure = e.what();
        }
        res.rows.push_back(std::move(row));
    };
    auto sarimax_run = [&](SarimaxSpec spec, bool with_exog) {
        const std::vector<std::vector<double>> none;
        spec.n_exog = with_exog ? static_cast<int>(train.exog.size()) : 0;
        const auto fit = fit_sarimax(train.y, with_exog ? train.exog : none, spec);
        if (!fit.converged) throw FitError("optimizer reached the evaluation cap");
        return forecast(fit, test_weeks, with_exog ? test.exog : none).point;
    };

    run("SARIMAX", [&] { return sarimax_run(models.sarimax, true); });
    run("SARIMA", [&] { return sarimax_run(models.sarima, false); });
    run("ARIMA", [&] { return sarimax_run(models.arima, false); });
    run("ETS", [&] { return fit_ets(train.y, 0).forecast(test_weeks); });
    run("ETS-seasonal", [&] { return fit_ets(train.y, models.ets_period).forecast(test_weeks); });
    for (const auto& ext : external) {
        auto row = score_external(ext, res.test_weeks, res.actual);
        if (row.report) res.predictions[ext.model] = ext.predicted;
        res.rows.push_back(std::move(row));
    }
    return res;
}

}  // namespace evqoe::forecast
