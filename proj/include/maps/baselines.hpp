#pragma once

#include "maps/market_data.hpp"
#include "maps/portfolio.hpp"

namespace maps {

// (p[t] - p[t-lookback]) / p[t-lookback]; positive leans long.
double momentum_signal(const MarketFrame& frame, std::size_t c, std::size_t t,
                       std::size_t lookback = 10);

// (MA - p[t]) / MA over the trailing `lookback` closes including t; price
// below its average leans long (expecting reversion up).
double mean_reversion_signal(const MarketFrame& frame, std::size_t c, std::size_t t,
                             std::size_t lookback = 30);

// Same L1 rule as agent_portfolio, so baseline weights are directly
// comparable with agent weights. With discrete=true only the signal signs
// are kept (equal-weight long/short book).
PortfolioVector signals_to_portfolio(const std::vector<double>& signals, bool discrete = false);

enum class BaselineKind { Momentum, MeanReversion };

// Daily rebalanced rule-strategy backtest over the same report schema as the
// agent pipeline. agent_returns holds the single strategy series.
BacktestReport run_baseline_backtest(BaselineKind kind, const MarketFrame& test_frame,
                                     std::size_t lookback, bool discrete = false,
                                     const std::vector<double>* rf = nullptr);

}  // namespace maps
