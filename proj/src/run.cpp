#include "maps/run.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace maps {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    return out;
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("config: bad boolean for " + key + ": '" + v + "'");
}

std::vector<std::size_t> parse_sizes(const std::string& v) {
    std::vector<std::size_t> sizes;
    for (const auto& tok : split_list(v, ',')) sizes.push_back(std::stoul(tok));
    if (sizes.empty()) throw std::invalid_argument("config: empty size list");
    return sizes;
}

std::vector<Regime> parse_regimes(const std::string& v) {
    // drift:volatility:length, regimes separated by ';'
    std::vector<Regime> regimes;
    for (const auto& tok : split_list(v, ';')) {
        const auto parts = split_list(tok, ':');
        if (parts.size() != 3) {
            throw std::invalid_argument("config: regime must be drift:volatility:length");
        }
        regimes.push_back({std::stod(parts[0]), std::stod(parts[1]), std::stoul(parts[2])});
    }
    if (regimes.empty()) throw std::invalid_argument("config: empty regime list");
    return regimes;
}

DateRange parse_range(const std::string& v) {
    const auto pos = v.find("..");
    if (pos == std::string::npos) {
        throw std::invalid_argument("config: date range must be YYYY-MM-DD..YYYY-MM-DD");
    }
    return {Date::parse(trim(v.substr(0, pos))), Date::parse(trim(v.substr(pos + 2)))};
}

}  // namespace

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);

    RunConfig cfg;
    bool t_set = false, v_set = false, s_set = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                        ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        try {
            if (key == "version") {
                if (val != "1") throw std::invalid_argument("unsupported config version " + val);
            } else if (key == "seed") cfg.train.seed = std::stoull(val);
            else if (key == "out_dir") cfg.out_dir = val;
            else if (key == "K") cfg.K = std::stoul(val);
            else if (key == "f") cfg.f = std::stoul(val);
            else if (key == "base_sizes") cfg.base_sizes = parse_sizes(val);
            else if (key == "maxiter") cfg.train.maxiter = std::stoull(val);
            else if (key == "batch_size") cfg.train.batch_size = std::stoul(val);
            else if (key == "target_sync") cfg.train.target_sync = std::stoull(val);
            else if (key == "lambda") cfg.train.lambda = std::stod(val);
            else if (key == "gamma") cfg.train.gamma = std::stod(val);
            else if (key == "lr") cfg.train.adam.lr = std::stod(val);
            else if (key == "eps_start") cfg.train.epsilon.start = std::stod(val);
            else if (key == "eps_end") cfg.train.epsilon.end = std::stod(val);
            else if (key == "eps_decay_frac") cfg.train.epsilon.decay_frac = std::stod(val);
            else if (key == "buffer_capacity") cfg.buffer_capacity = std::stoul(val);
            else if (key == "probe_every") cfg.train.probe_every = std::stoull(val);
            else if (key == "log_every") cfg.train.log_every = std::stoull(val);
            else if (key == "td_printed_form") cfg.train.td_printed_form = parse_bool(val, key);
            else if (key == "parallel") cfg.train.parallel = parse_bool(val, key);
            else if (key == "data") {
                if (val == "csv") cfg.use_csv = true;
                else if (val == "synth") cfg.use_csv = false;
                else throw std::invalid_argument("data must be csv or synth");
            } else if (key == "csv_path") cfg.csv_path = val;
            else if (key == "fill_policy") {
                if (val == "forward") cfg.load.fill = FillPolicy::Forward;
                else if (val == "drop") cfg.load.fill = FillPolicy::Drop;
                else throw std::invalid_argument("fill_policy must be forward or drop");
            } else if (key == "max_gap") cfg.load.max_gap = std::stoi(val);
            else if (key == "synth_companies") cfg.synth_companies = std::stoul(val);
            else if (key == "synth_days") cfg.synth_days = std::stoul(val);
            else if (key == "synth_regimes") cfg.synth_regimes = parse_regimes(val);
            else if (key == "synth_p0") cfg.synth_p0 = std::stod(val);
            else if (key == "synth_start") cfg.synth_start = Date::parse(val);
            else if (key == "synth_seed") cfg.synth_seed = std::stoull(val);
            else if (key == "frac_train") cfg.frac_train = std::stod(val);
            else if (key == "frac_valid") cfg.frac_valid = std::stod(val);
            else if (key == "split_train") { cfg.date_split.train = parse_range(val); t_set = true; }
            else if (key == "split_valid") { cfg.date_split.valid = parse_range(val); v_set = true; }
            else if (key == "split_test") { cfg.date_split.test = parse_range(val); s_set = true; }
            else if (key == "rf_csv") cfg.rf_csv = val;
            else if (key == "baseline_momentum") cfg.baseline_momentum = parse_bool(val, key);
            else if (key == "baseline_mean_reversion") {
                cfg.baseline_mean_reversion = parse_bool(val, key);
            } else if (key == "momentum_lookback") cfg.momentum_lookback = std::stoul(val);
            else if (key == "mean_reversion_lookback") {
                cfg.mean_reversion_lookback = std::stoul(val);
            } else if (key == "baseline_discrete") cfg.baseline_discrete = parse_bool(val, key);
            else throw std::invalid_argument("unknown key '" + key + "'");
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const std::exception& e) {
            throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": bad value for " +
                                        key + " (" + e.what() + ")");
        }
    }
    if (t_set || v_set || s_set) {
        if (!(t_set && v_set && s_set)) {
            throw std::invalid_argument(path + ": split_train/valid/test must be set together");
        }
        cfg.has_date_split = true;
    }
    if (cfg.K < 1 || cfg.K > 64) throw std::invalid_argument(path + ": K must be in 1..64");
    if (cfg.f < 2) throw std::invalid_argument(path + ": f must be >= 2");
    cfg.train.validate();
    return cfg;
}

MarketFrame build_market(const RunConfig& cfg) {
    if (cfg.use_csv) {
        if (cfg.csv_path.empty()) throw std::invalid_argument("config: data=csv needs csv_path");
        return load_prices(cfg.csv_path, cfg.load);
    }
    return synth_market(cfg.synth_companies, cfg.synth_days, cfg.synth_regimes, cfg.synth_seed,
                        cfg.synth_p0, cfg.synth_start);
}

Frames split_frames(const RunConfig& cfg, const MarketFrame& full) {
    SplitSpec spec;
    if (cfg.has_date_split) {
        spec = cfg.date_split;
    } else {
        const std::size_t T = full.n_days();
        const auto t_end = std::size_t(std::floor(cfg.frac_train * double(T)));
        const auto v_end = std::size_t(std::floor((cfg.frac_train + cfg.frac_valid) * double(T)));
        if (t_end == 0 || v_end <= t_end || v_end >= T) {
            throw std::invalid_argument("config: split fractions leave an empty range");
        }
        spec.train = {full.dates.front(), full.dates[t_end - 1]};
        spec.valid = {full.dates[t_end], full.dates[v_end - 1]};
        spec.test = {full.dates[v_end], full.dates.back()};
    }
    auto [train, valid, test] = split(full, spec);
    for (const MarketFrame* fr : {&train, &valid, &test}) {
        if (fr->n_days() < cfg.f + 1) {
            throw std::invalid_argument("config: a split holds fewer than f+1 days");
        }
    }
    return {std::move(train), std::move(valid), std::move(test)};
}

std::vector<double> load_risk_free(const std::string& path, const std::vector<Date>& dates) {
    if (path.empty()) return std::vector<double>(dates.size(), 0.0);
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open risk-free file " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    std::map<Date, double> by_date;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty()) continue;
        const auto c = line.find(',');
        if (c == std::string::npos) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed row");
        }
        by_date[Date::parse(line.substr(0, c))] = std::stod(line.substr(c + 1));
    }
    std::vector<double> out;
    out.reserve(dates.size());
    for (const Date& d : dates) {
        auto it = by_date.find(d);
        if (it == by_date.end()) {
            throw std::runtime_error(path + ": no risk-free rate for " + d.to_string());
        }
        if (!std::isfinite(it->second)) {
            throw std::runtime_error(path + ": non-finite rate for " + d.to_string());
        }
        out.push_back(it->second);
    }
    return out;
}

void write_report_csv(const BacktestReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(17);
    out << "date,portfolio_return,wealth";
    for (std::size_t i = 0; i < rep.agent_returns.size(); ++i) out << ",agent_" << i;
    out << ",degenerate\n";
    for (std::size_t t = 0; t < rep.daily_returns.size(); ++t) {
        out << rep.dates[t].to_string() << ',' << rep.daily_returns[t] << ',' << rep.wealth[t + 1];
        for (const auto& s : rep.agent_returns) out << ',' << s[t];
        out << ',' << (rep.degenerate_day[t] ? 1 : 0) << '\n';
    }
    if (!out) throw std::runtime_error("write failed for " + path);
}

void write_summary_csv(const BacktestReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(17);
    out << "annualized_return,sharpe,mean_pairwise_return_corr,degenerate_days\n";
    out << rep.annualized_return << ',';
    if (rep.sharpe_defined) out << rep.sharpe;
    out << ',';
    if (rep.corr_defined) out << rep.mean_pairwise_return_corr;
    out << ',' << rep.degenerate_days << '\n';
    if (!out) throw std::runtime_error("write failed for " + path);
}

void write_probe_csv(const TrainLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(17);
    out << "iteration,mean_confidence_corr\n";
    for (const auto& e : log.entries) {
        if (e.agent == 0 && e.mean_pairwise_corr) {
            out << e.iteration << ',' << *e.mean_pairwise_corr << '\n';
        }
    }
    if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace maps
