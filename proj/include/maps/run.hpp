#pragma once

#include <map>
#include <string>

#include "maps/baselines.hpp"
#include "maps/market_data.hpp"
#include "maps/training.hpp"

namespace maps {

// Flat key = value run configuration. Every hyperparameter in the training
// defaults below is overridable; unknown keys are rejected.
struct RunConfig {
    // Model.
    std::size_t K = 4;
    std::size_t f = 30;
    std::vector<std::size_t> base_sizes = {32, 16};

    // Training.
    TrainConfig train{};
    std::size_t buffer_capacity = 50000;  // M; the replay index range is [0, M)

    // Data source.
    bool use_csv = false;
    std::string csv_path;
    LoadOptions load{};
    std::size_t synth_companies = 20;
    std::size_t synth_days = 1500;
    std::vector<Regime> synth_regimes = {{0.0005, 0.01, 500}, {-0.0005, 0.02, 500},
                                         {0.0, 0.015, 500}};
    double synth_p0 = 100.0;
    Date synth_start = Date::parse("2000-01-03");
    std::uint64_t synth_seed = 1;

    // Split: fractional by default, explicit date ranges win when present.
    double frac_train = 0.6, frac_valid = 0.2;
    bool has_date_split = false;
    SplitSpec date_split{};

    // Backtest / comparison.
    std::string rf_csv;  // optional date,rate file (daily percent)
    bool baseline_momentum = true;
    bool baseline_mean_reversion = true;
    std::size_t momentum_lookback = 10;
    std::size_t mean_reversion_lookback = 30;
    bool baseline_discrete = false;

    std::string out_dir = "out";
};

RunConfig load_config(const std::string& path);

struct Frames {
    MarketFrame train, valid, test;
};

MarketFrame build_market(const RunConfig& cfg);
Frames split_frames(const RunConfig& cfg, const MarketFrame& full);

// Risk-free series aligned to the report's decision days; zeros when no file
// is configured.
std::vector<double> load_risk_free(const std::string& path, const std::vector<Date>& dates);

void write_report_csv(const BacktestReport& rep, const std::string& path);
void write_summary_csv(const BacktestReport& rep, const std::string& path);
void write_probe_csv(const TrainLog& log, const std::string& path);

}  // namespace maps
