#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "evqoe/features.hpp"
#include "evqoe/forecast/accuracy.hpp"
#include "evqoe/forecast/sarimax.hpp"

namespace evqoe::forecast {

/// Model set compared in a backtest. `sarimax` uses every exog column of the series;
/// `sarima` and `arima` are fitted without exog.
struct BacktestModels {
    SarimaxSpec sarimax;
    SarimaxSpec sarima;
    SarimaxSpec arima;
    int ets_period = 52;
};

/// Defaults derived from one seasonal spec: SARIMA drops the exog, ARIMA drops the seasonal part.
BacktestModels default_models(const SarimaxSpec& seasonal);

struct BacktestResult {
    std::vector<BacktestRow> rows;  ///< SARIMAX, SARIMA, ARIMA, ETS, ETS-seasonal, externals
    std::map<std::string, std::vector<double>> predictions;
    std::vector<std::string> test_weeks;
    std::vector<double> actual;
};

/// Trains every model on the first `train_weeks` weeks and scores the next `test_weeks`.
/// Model failures become failure rows; the remaining models are unaffected.
BacktestResult backtest(const features::WeeklySeries& weekly, std::size_t train_weeks, std::size_t test_weeks,
                        const BacktestModels& models, const std::vector<ExternalPredictions>& external = {});

}  // namespace evqoe::forecast
