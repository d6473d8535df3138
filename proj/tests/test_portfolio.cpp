#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "maps/portfolio.hpp"
#include "maps/rng.hpp"

using namespace maps;

namespace {

// Random confidence on a dyadic grid (multiples of 2^-20), so that scaling by
// small integers like 2 or 10 is exact in double precision and bitwise
// scale-invariance is a well-posed property.
double grid_value(std::mt19937_64& rng) {
    return double(std::int64_t(rng() % 2000001) - 1000000) * 0x1p-20;
}

Agent constant_q_agent(std::size_t f, const QRow& q) {
    AgentSpec spec;
    spec.input_dim = f;
    std::mt19937_64 rng(0);
    Agent a = make_agent(spec, rng);
    a.online.layers.assign(1, DenseLayer{f, 3, std::vector<double>(f * 3, 0.0), {q[0], q[1], q[2]}});
    a.online.bn.clear();
    a.target = snapshot(a.online);
    a.adam = AdamState::zeros_like(a.online);
    return a;
}

}  // namespace

TEST_CASE("agent_portfolio: direct evaluation") {
    PortfolioVector p = agent_portfolio({2.0, -1.0, 1.0});
    CHECK(p.weights == std::vector<double>{0.5, -0.25, 0.25});
    CHECK_FALSE(p.degenerate);

    PortfolioVector z = agent_portfolio({0.0, 0.0, 0.0});
    CHECK(z.degenerate);
    CHECK(z.weights == std::vector<double>{0.0, 0.0, 0.0});

    CHECK(agent_portfolio({5.0}).weights == std::vector<double>{1.0});
    CHECK_THROWS_AS(agent_portfolio({1.0, std::nan("")}), std::invalid_argument);
}

TEST_CASE("agent_portfolio: L1 invariant and bitwise scale invariance") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t n = 1 + rng() % 25;
        std::vector<double> eta(n);
        for (double& v : eta) v = grid_value(rng);

        PortfolioVector p = agent_portfolio(eta);
        if (p.degenerate) continue;
        double l1 = 0.0;
        for (double w : p.weights) l1 += std::fabs(w);
        CHECK(std::fabs(l1 - 1.0) < 1e-9);

        for (double k : {2.0, 10.0}) {
            std::vector<double> scaled(n);
            for (std::size_t i = 0; i < n; ++i) scaled[i] = k * eta[i];
            CHECK(agent_portfolio(scaled).weights == p.weights);
        }
    }
}

TEST_CASE("aggregate_portfolio: mean then renormalize") {
    PortfolioVector a{{1.0, 0.0}, false}, b{{0.0, 1.0}, false};
    PortfolioVector agg = aggregate_portfolio({a, b});
    CHECK(agg.weights == std::vector<double>{0.5, 0.5});

    // All agents identical -> idempotent.
    PortfolioVector same = agent_portfolio({2.0, -1.0, 1.0});
    PortfolioVector agg3 = aggregate_portfolio({same, same, same});
    for (std::size_t c = 0; c < 3; ++c) {
        CHECK(agg3.weights[c] == doctest::Approx(same.weights[c]).epsilon(1e-15));
    }

    // Exact cancellation is degenerate, not fatal.
    PortfolioVector neg{{-1.0, 0.0}, false};
    CHECK(aggregate_portfolio({a, neg}).degenerate);

    CHECK_THROWS_AS(aggregate_portfolio({}), std::invalid_argument);
    CHECK_THROWS_AS(aggregate_portfolio({a, agent_portfolio({1.0, 2.0, 3.0})}),
                    std::invalid_argument);
}

TEST_CASE("aggregate_portfolio: L1 invariant on random ensembles") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng() % 10, K = 1 + rng() % 6;
        std::vector<PortfolioVector> per_agent;
        for (std::size_t i = 0; i < K; ++i) {
            std::vector<double> eta(n);
            for (double& v : eta) v = grid_value(rng);
            per_agent.push_back(agent_portfolio(eta));
        }
        PortfolioVector agg = aggregate_portfolio(per_agent);
        if (agg.degenerate) continue;
        double l1 = 0.0;
        for (double w : agg.weights) l1 += std::fabs(w);
        CHECK(std::fabs(l1 - 1.0) < 1e-9);
    }
}

TEST_CASE("portfolio_return: hand cases") {
    MarketFrame frame;
    frame.tickers = {"A"};
    frame.dates = {Date::parse("2006-01-03"), Date::parse("2006-01-04")};
    frame.closes = {100.0, 102.0};
    CHECK(portfolio_return({{1.0}, false}, frame, 0) == doctest::Approx(2.0));
    CHECK(portfolio_return({{-1.0}, false}, frame, 0) == doctest::Approx(-2.0));
    CHECK_THROWS_AS(portfolio_return({{1.0}, false}, frame, 1), std::out_of_range);

    MarketFrame two;
    two.tickers = {"A", "B"};
    two.dates = frame.dates;
    two.closes = {100.0, 102.0, 100.0, 98.0};  // +2% and -2%
    CHECK(portfolio_return({{0.5, 0.5}, false}, two, 0) == doctest::Approx(0.0));
    CHECK_THROWS_AS(portfolio_return({{1.0}, false}, two, 0), std::invalid_argument);
}

TEST_CASE("portfolio_return: matches brute-force recomputation on random instances") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng() % 15;
        MarketFrame frame = synth_market(n, 12, {{0.001, 0.03, 12}}, 100 + trial);
        std::vector<double> eta(n);
        for (double& v : eta) v = grid_value(rng);
        PortfolioVector p = agent_portfolio(eta);
        if (p.degenerate) continue;
        const std::size_t t = rng() % 11;

        // Independent term-by-term recomputation.
        long double acc = 0.0L;
        for (std::size_t c = 0; c < n; ++c) {
            const long double p0 = frame.price(c, t);
            acc += (static_cast<long double>(frame.price(c, t + 1)) - p0) / p0 * p.weights[c];
        }
        CHECK(portfolio_return(p, frame, t) ==
              doctest::Approx(double(100.0L * acc)).epsilon(1e-9));
    }
}

TEST_CASE("sharpe_ratio: hand cases and errors") {
    std::vector<double> rf3(3, 0.0);
    const double s = sharpe_ratio({0.1, 0.2, 0.3}, rf3);
    CHECK(std::fabs(s - std::sqrt(252.0) * 2.0) < 1e-6);
    CHECK(std::fabs(s - 31.749) < 1e-2);

    std::vector<double> alt = {1.0, -1.0, 1.0, -1.0, 1.0, -1.0};
    CHECK(sharpe_ratio(alt, std::vector<double>(6, 0.0)) == doctest::Approx(0.0));

    CHECK_THROWS_AS(sharpe_ratio({1.0, 1.0, 1.0}, rf3), std::runtime_error);
    CHECK_THROWS_AS(sharpe_ratio({1.0}, {0.0}), std::invalid_argument);
    CHECK_THROWS_AS(sharpe_ratio({1.0, 2.0}, {0.0}), std::invalid_argument);

    // Sign of Sharpe equals sign of mean excess return.
    CHECK(sharpe_ratio({0.5, 0.1, 0.3}, rf3) > 0.0);
    CHECK(sharpe_ratio({-0.5, -0.1, -0.3}, rf3) < 0.0);
    // Non-zero risk-free series shifts the mean.
    CHECK(sharpe_ratio({0.1, 0.2, 0.3}, {0.2, 0.2, 0.2}) == doctest::Approx(0.0));
}

TEST_CASE("sharpe_ratio: matches brute-force recomputation on random instances") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng() % 300;
        std::vector<double> r(n), rf(n);
        for (std::size_t t = 0; t < n; ++t) {
            r[t] = gaussian(rng) * 0.8;
            rf[t] = gaussian(rng) * 0.01;
        }
        // Independent recomputation in extended precision, term by term.
        long double mean = 0.0L;
        for (std::size_t t = 0; t < n; ++t) mean += static_cast<long double>(r[t]) - rf[t];
        mean /= n;
        long double ss = 0.0L;
        for (std::size_t t = 0; t < n; ++t) {
            const long double d = static_cast<long double>(r[t]) - rf[t] - mean;
            ss += d * d;
        }
        const long double oracle = std::sqrt(252.0L) * mean / std::sqrt(ss / (n - 1));
        CHECK(sharpe_ratio(r, rf) == doctest::Approx(double(oracle)).epsilon(1e-9));
    }
}

TEST_CASE("return_correlation_matrix: identical, negated, independent, degenerate") {
    std::vector<double> x = {1.0, 2.0, -1.0, 3.0};
    std::vector<double> nx = {-1.0, -2.0, 1.0, -3.0};
    double offdiag = 0.0;
    auto m = return_correlation_matrix({x, x}, &offdiag);
    CHECK(m[0][1] == doctest::Approx(1.0));
    CHECK(offdiag == doctest::Approx(1.0));

    m = return_correlation_matrix({x, nx}, &offdiag);
    CHECK(m[0][1] == doctest::Approx(-1.0));
    CHECK(m[1][0] == doctest::Approx(-1.0));

    // Two independent random series stay near zero.
    std::mt19937_64 rng(5);
    std::vector<double> a(10000), b(10000);
    for (std::size_t t = 0; t < a.size(); ++t) {
        a[t] = gaussian(rng);
        b[t] = gaussian(rng);
    }
    return_correlation_matrix({a, b}, &offdiag);
    CHECK(std::fabs(offdiag) < 0.05);

    // Zero-variance series: NaN entry, excluded from the mean.
    std::vector<double> flat(4, 2.0);
    m = return_correlation_matrix({x, nx, flat}, &offdiag);
    CHECK(std::isnan(m[0][2]));
    CHECK(std::isnan(m[1][2]));
    CHECK(offdiag == doctest::Approx(-1.0));  // only the (x, nx) pair counts
}

TEST_CASE("run_backtest: constant confidence gives equal weights; wealth compounds") {
    MarketFrame frame = synth_market(4, 25, {{0.001, 0.02, 25}}, 50);
    const std::size_t f = 5;
    // Q[Long]-Q[Short] = 1 for every state: equal-weight portfolio.
    std::vector<Agent> agents = {constant_q_agent(f, {1.0, 0.0, 0.0})};
    BacktestReport rep = run_backtest(agents, frame, f);

    REQUIRE(rep.daily_returns.size() == frame.n_days() - f);
    CHECK(rep.wealth.size() == rep.daily_returns.size() + 1);
    CHECK(rep.wealth[0] == 100.0);
    for (std::size_t t = 0; t < rep.daily_returns.size(); ++t) {
        CHECK(rep.wealth[t + 1] ==
              doctest::Approx(rep.wealth[t] * (1.0 + rep.daily_returns[t] / 100.0))
                  .epsilon(1e-12));
        // Equal-weight oracle computed directly from prices.
        double r = 0.0;
        const std::size_t day = f - 1 + t;
        for (std::size_t c = 0; c < frame.n_companies(); ++c) {
            r += daily_return_pct(frame, c, day) / double(frame.n_companies());
        }
        CHECK(rep.daily_returns[t] == doctest::Approx(r).epsilon(1e-9));
    }

    // Annualized return equals independent recomputation from the series.
    double mean = 0.0;
    for (double r : rep.daily_returns) mean += r;
    mean /= double(rep.daily_returns.size());
    CHECK(rep.annualized_return == doctest::Approx(mean * 252.0).epsilon(1e-12));
}

TEST_CASE("run_backtest: degenerate day yields zero return and a flag") {
    MarketFrame frame = synth_market(3, 15, {{0.001, 0.02, 15}}, 51);
    std::vector<Agent> agents = {constant_q_agent(4, {0.5, 0.0, 0.5})};  // eta = 0 everywhere
    BacktestReport rep = run_backtest(agents, frame, 4);
    CHECK(rep.degenerate_days == rep.daily_returns.size());
    for (std::size_t t = 0; t < rep.daily_returns.size(); ++t) {
        CHECK(rep.daily_returns[t] == 0.0);
        CHECK(rep.degenerate_day[t]);
    }
    CHECK(rep.wealth.back() == 100.0);
    CHECK_FALSE(rep.sharpe_defined);  // constant zero series has no variance
}

TEST_CASE("run_backtest: frame shorter than f+1 rejected; multi-agent correlations filled") {
    MarketFrame small = synth_market(2, 4, {{0.0, 0.01, 4}}, 52);
    std::vector<Agent> agents = {constant_q_agent(5, {1.0, 0.0, 0.0})};
    CHECK_THROWS_AS(run_backtest(agents, small, 5), std::invalid_argument);

    MarketFrame frame = synth_market(3, 30, {{0.001, 0.02, 30}}, 53);
    std::mt19937_64 rng(6);
    std::vector<Agent> two;
    for (const auto& spec : build_ensemble(2, 5, {6})) two.push_back(make_agent(spec, rng));
    BacktestReport rep = run_backtest(two, frame, 5);
    REQUIRE(rep.return_corr.size() == 2);
    CHECK(rep.return_corr[0][0] == 1.0);
    CHECK(rep.return_corr[0][1] == rep.return_corr[1][0]);
    REQUIRE(rep.agent_returns.size() == 2);
    CHECK(rep.agent_returns[0].size() == rep.daily_returns.size());
}

TEST_CASE("confidence_correlation_probe: preconditions and fixed points") {
    MarketFrame frame = synth_market(3, 20, {{0.001, 0.02, 20}}, 54);
    std::mt19937_64 rng(7);
    Agent a = make_agent(build_ensemble(1, 5, {6})[0], rng);
    CHECK_THROWS_AS(confidence_correlation_probe({a}, frame, 5), std::invalid_argument);

    // Identical parameters -> probe exactly 1.
    std::vector<Agent> twins = {a, a};
    CHECK(confidence_correlation_probe(twins, frame, 5) == doctest::Approx(1.0));

    // Positive affine rescaling of one agent's head leaves the probe unchanged
    // (Pearson invariance).
    Agent b = make_agent(build_ensemble(2, 5, {6})[1], rng);
    std::vector<Agent> pair = {a, b};
    const double before = confidence_correlation_probe(pair, frame, 5);
    for (double& w : pair[1].online.layers.back().w) w *= 3.0;
    for (double& v : pair[1].online.layers.back().b) v *= 3.0;
    CHECK(confidence_correlation_probe(pair, frame, 5) == doctest::Approx(before).epsilon(1e-9));
    CHECK(before >= 0.0);
    CHECK(before <= 1.0 + 1e-12);
}
