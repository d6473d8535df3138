#include "maps/portfolio.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "maps/training.hpp"

namespace maps {

PortfolioVector agent_portfolio(const std::vector<double>& eta) {
    PortfolioVector p;
    p.weights.assign(eta.size(), 0.0);
    double l1 = 0.0;
    for (double v : eta) {
        if (!std::isfinite(v)) throw std::invalid_argument("agent_portfolio: non-finite confidence");
        l1 += std::fabs(v);
    }
    if (l1 == 0.0) {
        p.degenerate = true;
        return p;
    }
    for (std::size_t c = 0; c < eta.size(); ++c) p.weights[c] = eta[c] / l1;
    return p;
}

PortfolioVector aggregate_portfolio(const std::vector<PortfolioVector>& per_agent) {
    if (per_agent.empty()) throw std::invalid_argument("aggregate_portfolio: no portfolios");
    const std::size_t n = per_agent.front().weights.size();
    std::vector<double> mean(n, 0.0);
    for (const auto& p : per_agent) {
        if (p.weights.size() != n) {
            throw std::invalid_argument("aggregate_portfolio: length mismatch");
        }
        for (std::size_t c = 0; c < n; ++c) mean[c] += p.weights[c];
    }
    for (double& v : mean) v /= double(per_agent.size());
    return agent_portfolio(mean);
}

double portfolio_return(const PortfolioVector& alpha, const MarketFrame& frame, std::size_t t) {
    if (t + 1 >= frame.n_days()) throw std::out_of_range("portfolio_return: t+1 out of range");
    if (alpha.weights.size() != frame.n_companies()) {
        throw std::invalid_argument("portfolio_return: weight length != company count");
    }
    double r = 0.0;
    for (std::size_t c = 0; c < frame.n_companies(); ++c) {
        const double p0 = frame.price(c, t);
        r += (frame.price(c, t + 1) - p0) / p0 * alpha.weights[c];
    }
    return 100.0 * r;
}

double sharpe_ratio(const std::vector<double>& returns, const std::vector<double>& rf) {
    if (returns.size() < 2) throw std::invalid_argument("sharpe_ratio: need >= 2 returns");
    if (rf.size() != returns.size()) {
        throw std::invalid_argument("sharpe_ratio: risk-free series length mismatch");
    }
    const std::size_t n = returns.size();
    double mean = 0.0;
    for (std::size_t t = 0; t < n; ++t) mean += returns[t] - rf[t];
    mean /= double(n);
    double ss = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double d = returns[t] - rf[t] - mean;
        ss += d * d;
    }
    const double sd = std::sqrt(ss / double(n - 1));
    if (!(sd > 0.0)) throw std::runtime_error("undefined Sharpe: zero excess-return variance");
    return std::sqrt(252.0) * mean / sd;
}

std::vector<std::vector<double>> return_correlation_matrix(
    const std::vector<std::vector<double>>& series, double* mean_offdiag) {
    const std::size_t K = series.size();
    if (K == 0) throw std::invalid_argument("return_correlation_matrix: no series");
    const std::size_t n = series.front().size();
    if (n < 2) throw std::invalid_argument("return_correlation_matrix: series too short");
    for (const auto& s : series) {
        if (s.size() != n) throw std::invalid_argument("return_correlation_matrix: ragged series");
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::vector<double>> m(K, std::vector<double>(K, 1.0));
    double acc = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < K; ++i) {
        for (std::size_t j = i + 1; j < K; ++j) {
            const CorrResult c = pearson(series[i], series[j]);
            m[i][j] = m[j][i] = c.degenerate ? nan : c.corr;
            if (!c.degenerate) {
                acc += c.corr;
                ++pairs;
            }
        }
    }
    if (mean_offdiag) *mean_offdiag = pairs ? acc / double(pairs) : nan;
    return m;
}

BacktestReport run_backtest(const std::vector<Agent>& agents, const MarketFrame& test_frame,
                            std::size_t f, const std::vector<double>* rf) {
    if (agents.empty()) throw std::invalid_argument("run_backtest: no agents");
    const std::size_t N = test_frame.n_companies();
    const std::size_t T = test_frame.n_days();
    if (T < f + 1) throw std::invalid_argument("run_backtest: test frame shorter than f+1 days");
    const std::size_t K = agents.size();

    BacktestReport rep;
    rep.agent_returns.assign(K, {});
    rep.wealth.push_back(100.0);

    Matrix states(N, f);
    for (std::size_t t = f - 1; t + 1 < T; ++t) {
        for (std::size_t c = 0; c < N; ++c) {
            const StateWindow w = make_state(test_frame, c, t, f);
            std::copy(w.values.begin(), w.values.end(), states.d.begin() + std::ptrdiff_t(c * f));
        }

        std::vector<PortfolioVector> per_agent(K);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(K); ++i) {
            const Matrix q = mlp_forward_eval(agents[std::size_t(i)].online, states);
            std::vector<double> eta(N);
            for (std::size_t c = 0; c < N; ++c) eta[c] = q.at(c, 0) - q.at(c, 2);
            per_agent[std::size_t(i)] = agent_portfolio(eta);
        }

        const PortfolioVector alpha = aggregate_portfolio(per_agent);
        const double r = alpha.degenerate ? 0.0 : portfolio_return(alpha, test_frame, t);

        rep.dates.push_back(test_frame.dates[t]);
        rep.daily_returns.push_back(r);
        rep.wealth.push_back(rep.wealth.back() * (1.0 + r / 100.0));
        rep.degenerate_day.push_back(alpha.degenerate);
        if (alpha.degenerate) ++rep.degenerate_days;
        for (std::size_t i = 0; i < K; ++i) {
            rep.agent_returns[i].push_back(
                per_agent[i].degenerate ? 0.0 : portfolio_return(per_agent[i], test_frame, t));
        }
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

    if (K >= 2 && rep.daily_returns.size() >= 2) {
        double offdiag = 0.0;
        rep.return_corr = return_correlation_matrix(rep.agent_returns, &offdiag);
        rep.corr_defined = std::isfinite(offdiag);
        rep.mean_pairwise_return_corr = offdiag;
    }
    return rep;
}

double confidence_correlation_probe(const std::vector<Agent>& agents,
                                    const MarketFrame& probe_frame, std::size_t f) {
    if (agents.size() < 2) {
        throw std::invalid_argument("confidence_correlation_probe: needs >= 2 agents");
    }
    const std::size_t N = probe_frame.n_companies();
    const std::size_t T = probe_frame.n_days();
    if (T < f) throw std::invalid_argument("confidence_correlation_probe: frame shorter than f");

    const std::size_t days = T - f + 1;
    Matrix states(N * days, f);
    std::size_t row = 0;
    for (std::size_t c = 0; c < N; ++c) {
        for (std::size_t t = f - 1; t < T; ++t, ++row) {
            const StateWindow w = make_state(probe_frame, c, t, f);
            std::copy(w.values.begin(), w.values.end(),
                      states.d.begin() + std::ptrdiff_t(row * f));
        }
    }

    std::vector<std::vector<double>> etas(agents.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(agents.size()); ++i) {
        const Matrix q = mlp_forward_eval(agents[std::size_t(i)].online, states);
        std::vector<double>& eta = etas[std::size_t(i)];
        eta.resize(q.rows);
        for (std::size_t b = 0; b < q.rows; ++b) eta[b] = q.at(b, 0) - q.at(b, 2);
    }

    double acc = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < agents.size(); ++i) {
        for (std::size_t j = i + 1; j < agents.size(); ++j) {
            const CorrResult c = pearson(etas[i], etas[j]);
            if (c.degenerate) continue;
            acc += std::fabs(c.corr);
            ++pairs;
        }
    }
    return pairs ? acc / double(pairs) : 0.0;
}

}  // namespace maps
