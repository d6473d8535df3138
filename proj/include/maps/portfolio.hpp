#pragma once

#include <vector>

#include "maps/agents.hpp"
#include "maps/market_data.hpp"

namespace maps {

// Signed capital weights with unit L1 norm; all-zero (flagged) when every
// confidence vanished.
struct PortfolioVector {
    std::vector<double> weights;
    bool degenerate = false;
};

// Eq.-(8)-style L1 normalization of a confidence row.
PortfolioVector agent_portfolio(const std::vector<double>& eta);

// Mean of the per-agent vectors, re-normalized to unit L1.
PortfolioVector aggregate_portfolio(const std::vector<PortfolioVector>& per_agent);

// 100 * sum_c alpha_c * (p[t+1]-p[t])/p[t].
double portfolio_return(const PortfolioVector& alpha, const MarketFrame& frame, std::size_t t);

// Annualized Sharpe over daily percent returns: sqrt(252) * mean(excess) /
// sample-std(excess). Throws on zero variance or a series shorter than 2.
double sharpe_ratio(const std::vector<double>& returns, const std::vector<double>& rf);

// Pearson matrix of per-agent daily return series. Undefined (zero-variance)
// pairs come back as NaN and are excluded from the off-diagonal mean.
std::vector<std::vector<double>> return_correlation_matrix(
    const std::vector<std::vector<double>>& series, double* mean_offdiag = nullptr);

struct BacktestReport {
    std::vector<Date> dates;            // decision days (return realized next day)
    std::vector<double> daily_returns;  // aggregate portfolio, percent
    std::vector<double> wealth;         // starts at 100, length returns+1
    std::vector<std::vector<double>> agent_returns;  // K series
    std::vector<std::vector<double>> return_corr;    // K x K
    double annualized_return = 0.0;
    double sharpe = 0.0;
    bool sharpe_defined = false;
    double mean_pairwise_return_corr = 0.0;
    bool corr_defined = false;
    std::vector<bool> degenerate_day;
    std::size_t degenerate_days = 0;
};

// Daily rebalanced, frictionless out-of-sample run: eval-mode confidences ->
// per-agent portfolios -> aggregate -> next-day return, compounded from 100.
// rf, when given, must cover every decision day (percent, aligned).
BacktestReport run_backtest(const std::vector<Agent>& agents, const MarketFrame& test_frame,
                            std::size_t f, const std::vector<double>* rf = nullptr);

// Mean absolute pairwise Pearson correlation of the agents' online-network
// confidence vectors over every full-window (company, day) state.
double confidence_correlation_probe(const std::vector<Agent>& agents,
                                    const MarketFrame& probe_frame, std::size_t f);

}  // namespace maps
