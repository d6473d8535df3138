#pragma once

#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "maps/date.hpp"

namespace maps {

// Daily closing-price panel: N tickers x T dates, every cell present and
// strictly positive. Immutable after construction; safe for concurrent reads.
struct MarketFrame {
    std::vector<std::string> tickers;  // length N
    std::vector<Date> dates;           // length T, strictly increasing
    std::vector<double> closes;        // N*T row-major (ticker-major)

    std::size_t n_companies() const { return tickers.size(); }
    std::size_t n_days() const { return dates.size(); }

    double price(std::size_t c, std::size_t t) const { return closes[c * dates.size() + t]; }
    double& price(std::size_t c, std::size_t t) { return closes[c * dates.size() + t]; }

    // Throws if any invariant is broken.
    void validate() const;
};

// Normalized close window for one (company, day). values[0] is always 0.
struct StateWindow {
    std::vector<double> values;
    std::size_t company = 0;
    std::size_t t = 0;

    bool operator==(const StateWindow&) const = default;
};

struct SplitSpec {
    DateRange train, valid, test;

    void validate() const;  // non-overlapping, chronological
};

enum class FillPolicy { Forward, Drop };

struct LoadOptions {
    FillPolicy fill = FillPolicy::Forward;
    int max_gap = 5;  // companies with longer interior gaps are dropped
};

struct LoadReport {
    std::vector<std::string> dropped_tickers;
};

// CSV loader. Header `date,ticker,close` required; rows may arrive unsorted.
MarketFrame load_prices(const std::string& path, const LoadOptions& opts = {},
                        LoadReport* report = nullptr);

// Window of the f closes ending at day t, rebased to the first element:
// values[k] = p[t-f+1+k] / p[t-f+1] - 1.
StateWindow make_state(const MarketFrame& frame, std::size_t c, std::size_t t, std::size_t f);

// 100 * (p[t+1] - p[t]) / p[t].
double daily_return_pct(const MarketFrame& frame, std::size_t c, std::size_t t);

std::tuple<MarketFrame, MarketFrame, MarketFrame> split(const MarketFrame& frame,
                                                        const SplitSpec& spec);

struct Regime {
    double drift = 0.0;       // per-day log-return drift
    double volatility = 0.0;  // per-day log-return standard deviation
    std::size_t length = 0;   // days under this regime
};

// Geometric random walk per company, regimes applied in sequence. The same
// seed always produces the same frame, bit for bit.
MarketFrame synth_market(std::size_t n_companies, std::size_t n_days,
                         const std::vector<Regime>& regimes, std::uint64_t seed,
                         double initial_price = 100.0,
                         Date start_date = Date::parse("2000-01-03"));

// Writes the panel back out in the loader's CSV schema.
void write_prices(const MarketFrame& frame, const std::string& path);

}  // namespace maps
