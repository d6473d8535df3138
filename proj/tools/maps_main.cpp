#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "maps/checkpoint.hpp"
#include "maps/run.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
};

maps::RunConfig load_with_overrides(const CommonOpts& opts) {
    maps::RunConfig cfg = maps::load_config(opts.config_path);
    if (opts.seed) cfg.train.seed = *opts.seed;
    if (opts.out) cfg.out_dir = *opts.out;
    return cfg;
}

std::vector<maps::Agent> build_agents(const maps::RunConfig& cfg) {
    std::mt19937_64 rng(cfg.train.seed);
    std::vector<maps::Agent> agents;
    for (const auto& spec : maps::build_ensemble(cfg.K, cfg.f, cfg.base_sizes)) {
        agents.push_back(maps::make_agent(spec, rng));
    }
    return agents;
}

int cmd_synth(const CommonOpts& opts) {
    maps::RunConfig cfg = load_with_overrides(opts);
    const maps::MarketFrame frame =
        maps::synth_market(cfg.synth_companies, cfg.synth_days, cfg.synth_regimes, cfg.synth_seed,
                           cfg.synth_p0, cfg.synth_start);
    fs::create_directories(cfg.out_dir);
    const std::string path = (fs::path(cfg.out_dir) / "market.csv").string();
    maps::write_prices(frame, path);
    std::cout << "wrote " << path << " (" << frame.n_companies() << " companies x "
              << frame.n_days() << " days)\n";
    return 0;
}

int cmd_train(const CommonOpts& opts) {
    maps::RunConfig cfg = load_with_overrides(opts);
    const maps::MarketFrame market = maps::build_market(cfg);
    const maps::Frames frames = maps::split_frames(cfg, market);

    std::vector<maps::Agent> agents = build_agents(cfg);
    maps::MemoryBuffer buffer(cfg.K, cfg.buffer_capacity);

    fs::create_directories(cfg.out_dir);
    std::ofstream log_csv(fs::path(cfg.out_dir) / "train_log.csv");
    if (!log_csv) throw std::runtime_error("cannot write train_log.csv in " + cfg.out_dir);

    const maps::TrainLog log =
        maps::train(agents, frames.train, buffer, cfg.train, &frames.valid, &log_csv);

    const std::string ckpt = (fs::path(cfg.out_dir) / "checkpoint").string();
    maps::save_ensemble(ckpt, agents, cfg.train.maxiter);
    maps::write_probe_csv(log, (fs::path(cfg.out_dir) / "probe.csv").string());

    std::cout << "trained " << cfg.K << " agents for " << cfg.train.maxiter
              << " iterations; checkpoint at " << ckpt << '\n';
    if (log.final_probe_corr) {
        std::cout << "final mean confidence correlation: " << *log.final_probe_corr << '\n';
    }
    if (log.degenerate_corr_pairs > 0) {
        std::cout << "degenerate correlation pairs skipped: " << log.degenerate_corr_pairs << '\n';
    }
    return 0;
}

int cmd_backtest(const CommonOpts& opts, const std::string& checkpoint) {
    maps::RunConfig cfg = load_with_overrides(opts);
    maps::EnsembleCheckpoint ck = maps::load_ensemble(checkpoint);
    if (ck.agents.size() != cfg.K || ck.agents.front().spec.input_dim != cfg.f) {
        throw std::invalid_argument("checkpoint manifest (K=" + std::to_string(ck.agents.size()) +
                                    ", f=" + std::to_string(ck.agents.front().spec.input_dim) +
                                    ") does not match config");
    }
    const maps::MarketFrame market = maps::build_market(cfg);
    const maps::Frames frames = maps::split_frames(cfg, market);

    // Decision days: every day with a full window and a next day.
    const std::vector<maps::Date> decision_days(frames.test.dates.begin() + long(cfg.f) - 1,
                                                frames.test.dates.end() - 1);
    const std::vector<double> rf = maps::load_risk_free(cfg.rf_csv, decision_days);
    const maps::BacktestReport rep = maps::run_backtest(ck.agents, frames.test, cfg.f, &rf);

    fs::create_directories(cfg.out_dir);
    maps::write_report_csv(rep, (fs::path(cfg.out_dir) / "report.csv").string());
    maps::write_summary_csv(rep, (fs::path(cfg.out_dir) / "summary.csv").string());
    std::cout << "backtest: annualized return " << rep.annualized_return << "%, Sharpe ";
    if (rep.sharpe_defined) std::cout << rep.sharpe;
    else std::cout << "undefined";
    std::cout << ", " << rep.daily_returns.size() << " days\n";
    return 0;
}

int cmd_compare(const CommonOpts& opts, std::string checkpoint) {
    maps::RunConfig cfg = load_with_overrides(opts);
    if (checkpoint.empty()) checkpoint = (fs::path(cfg.out_dir) / "checkpoint").string();
    maps::EnsembleCheckpoint ck = maps::load_ensemble(checkpoint);
    if (ck.agents.size() != cfg.K || ck.agents.front().spec.input_dim != cfg.f) {
        throw std::invalid_argument("checkpoint manifest does not match config");
    }
    const maps::MarketFrame market = maps::build_market(cfg);
    const maps::Frames frames = maps::split_frames(cfg, market);

    struct Row {
        std::string name;
        maps::BacktestReport rep;
        bool has_corr;
    };
    std::vector<Row> rows;

    auto rf_for = [&](std::size_t first_day) {
        const std::vector<maps::Date> days(frames.test.dates.begin() + long(first_day),
                                           frames.test.dates.end() - 1);
        return maps::load_risk_free(cfg.rf_csv, days);
    };

    {
        const std::vector<double> rf = rf_for(cfg.f - 1);
        rows.push_back({"MAPS@" + std::to_string(cfg.K),
                        maps::run_backtest(ck.agents, frames.test, cfg.f, &rf), cfg.K >= 2});
    }
    if (cfg.baseline_momentum) {
        const std::vector<double> rf = rf_for(cfg.momentum_lookback);
        rows.push_back({"MOM",
                        maps::run_baseline_backtest(maps::BaselineKind::Momentum, frames.test,
                                                    cfg.momentum_lookback, cfg.baseline_discrete,
                                                    &rf),
                        false});
    }
    if (cfg.baseline_mean_reversion) {
        const std::vector<double> rf = rf_for(cfg.mean_reversion_lookback - 1);
        rows.push_back({"MR",
                        maps::run_baseline_backtest(maps::BaselineKind::MeanReversion, frames.test,
                                                    cfg.mean_reversion_lookback,
                                                    cfg.baseline_discrete, &rf),
                        false});
    }

    fs::create_directories(cfg.out_dir);
    const std::string path = (fs::path(cfg.out_dir) / "compare.csv").string();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(17);
    out << "strategy,annualized_return,sharpe,mean_pairwise_return_corr\n";
    for (const auto& row : rows) {
        out << row.name << ',' << row.rep.annualized_return << ',';
        if (row.rep.sharpe_defined) out << row.rep.sharpe;
        out << ',';
        if (row.has_corr && row.rep.corr_defined) out << row.rep.mean_pairwise_return_corr;
        out << '\n';
    }
    std::cout << "wrote " << path << " (" << rows.size() << " strategies)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-agent Q-learning portfolio engine"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::uint64_t seed_opt = 0;
    std::string out_opt;
    std::string checkpoint;

    auto add_common = [&](CLI::App* sub, bool need_checkpoint) {
        sub->add_option("--config", opts.config_path, "run configuration file")->required();
        sub->add_option("--seed", seed_opt, "override config seed");
        sub->add_option("--out", out_opt, "override output directory");
        if (need_checkpoint) {
            sub->add_option("--checkpoint", checkpoint, "ensemble checkpoint directory");
        }
    };

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic market CSV");
    add_common(synth, false);
    CLI::App* train = app.add_subcommand("train", "train the agent ensemble");
    add_common(train, false);
    CLI::App* backtest = app.add_subcommand("backtest", "run an out-of-sample backtest");
    add_common(backtest, true);
    backtest->get_option("--checkpoint")->required();
    CLI::App* compare = app.add_subcommand("compare", "compare against rule baselines");
    add_common(compare, true);

    CLI11_PARSE(app, argc, argv);

    for (CLI::App* sub : {synth, train, backtest, compare}) {
        if (!sub->parsed()) continue;
        if (sub->count("--seed")) opts.seed = seed_opt;
        if (sub->count("--out")) opts.out = out_opt;
    }

    try {
        if (synth->parsed()) return cmd_synth(opts);
        if (train->parsed()) return cmd_train(opts);
        if (backtest->parsed()) return cmd_backtest(opts, checkpoint);
        if (compare->parsed()) return cmd_compare(opts, checkpoint);
    } catch (const maps::TrainingDiverged& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return 0;
}
