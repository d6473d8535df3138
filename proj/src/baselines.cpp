#include "maps/baselines.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace maps {

double momentum_signal(const MarketFrame& frame, std::size_t c, std::size_t t,
                       std::size_t lookback) {
    if (lookback == 0) throw std::invalid_argument("momentum_signal: lookback must be positive");
    if (t < lookback || t >= frame.n_days()) {
        throw std::out_of_range("momentum_signal: insufficient history at day " +
                                std::to_string(t));
    }
    const double p_then = frame.price(c, t - lookback);
    return (frame.price(c, t) - p_then) / p_then;
}

double mean_reversion_signal(const MarketFrame& frame, std::size_t c, std::size_t t,
                             std::size_t lookback) {
    if (lookback == 0) {
        throw std::invalid_argument("mean_reversion_signal: lookback must be positive");
    }
    if (t + 1 < lookback || t >= frame.n_days()) {
        throw std::out_of_range("mean_reversion_signal: insufficient history at day " +
                                std::to_string(t));
    }
    double ma = 0.0;
    for (std::size_t k = 0; k < lookback; ++k) ma += frame.price(c, t - k);
    ma /= double(lookback);
    return (ma - frame.price(c, t)) / ma;
}

PortfolioVector signals_to_portfolio(const std::vector<double>& signals, bool discrete) {
    if (!discrete) return agent_portfolio(signals);
    std::vector<double> signs(signals.size());
    for (std::size_t c = 0; c < signals.size(); ++c) {
        if (!std::isfinite(signals[c])) {
            throw std::invalid_argument("signals_to_portfolio: non-finite signal");
        }
        signs[c] = signals[c] > 0.0 ? 1.0 : (signals[c] < 0.0 ? -1.0 : 0.0);
    }
    return agent_portfolio(signs);
}

BacktestReport run_baseline_backtest(BaselineKind kind, const MarketFrame& test_frame,
                                     std::size_t lookback, bool discrete,
                                     const std::vector<double>* rf) {
    const std::size_t N = test_frame.n_companies();
    const std::size_t T = test_frame.n_days();
    // First day with both enough history for the signal and a next day.
    const std::size_t first =
        kind == BaselineKind::Momentum ? lookback : lookback - 1;
    if (first + 1 >= T) throw std::invalid_argument("baseline: frame too short for lookback");

    BacktestReport rep;
    rep.agent_returns.assign(1, {});
    rep.wealth.push_back(100.0);

    std::vector<double> signals(N);
    for (std::size_t t = first; t + 1 < T; ++t) {
        for (std::size_t c = 0; c < N; ++c) {
            signals[c] = kind == BaselineKind::Momentum
                             ? momentum_signal(test_frame, c, t, lookback)
                             : mean_reversion_signal(test_frame, c, t, lookback);
        }
        const PortfolioVector alpha = signals_to_portfolio(signals, discrete);
        const double r = alpha.degenerate ? 0.0 : portfolio_return(alpha, test_frame, t);
        rep.dates.push_back(test_frame.dates[t]);
        rep.daily_returns.push_back(r);
        rep.wealth.push_back(rep.wealth.back() * (1.0 + r / 100.0));
        rep.degenerate_day.push_back(alpha.degenerate);
        if (alpha.degenerate) ++rep.degenerate_days;
        rep.agent_returns[0].push_back(r);
    }

    double mean = 0.0;
    for (double r : rep.daily_returns) mean += r;
    mean /= double(rep.daily_returns.size());
    rep.annualized_return = mean * 252.0;

    std::vector<double> rf_series =
        rf ? *rf : std::vector<double>(rep.daily_returns.size(), 0.0);
    try {
        rep.sharpe = sharpe_ratio(rep.daily_returns, rf_series);
        rep.sharpe_defined = true;
    } catch (const std::exception&) {
        rep.sharpe = std::numeric_limits<double>::quiet_NaN();
        rep.sharpe_defined = false;
    }
    return rep;
}

}  // namespace maps
