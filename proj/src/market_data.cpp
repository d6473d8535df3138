#include "maps/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "maps/rng.hpp"

namespace maps {

void MarketFrame::validate() const {
    if (tickers.empty() || dates.empty()) {
        throw std::runtime_error("MarketFrame: empty panel");
    }
    if (closes.size() != tickers.size() * dates.size()) {
        throw std::runtime_error("MarketFrame: close matrix shape mismatch");
    }
    for (std::size_t t = 1; t < dates.size(); ++t) {
        if (!(dates[t - 1] < dates[t])) {
            throw std::runtime_error("MarketFrame: dates not strictly increasing");
        }
    }
    for (double p : closes) {
        if (!(p > 0.0) || !std::isfinite(p)) {
            throw std::runtime_error("MarketFrame: non-positive or non-finite close");
        }
    }
}

void SplitSpec::validate() const {
    for (const DateRange* r : {&train, &valid, &test}) {
        if (r->end < r->begin) throw std::invalid_argument("split range inverted");
    }
    if (train.overlaps(valid) || valid.overlaps(test) || train.overlaps(test)) {
        throw std::invalid_argument("split ranges overlap");
    }
    if (!(train.end < valid.begin && valid.end < test.begin)) {
        throw std::invalid_argument("split ranges out of chronological order");
    }
}

namespace {

struct Row {
    Date date;
    std::string ticker;
    double close;
};

std::vector<Row> parse_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open price file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty price file: " + path);
    // Tolerate a BOM and whitespace in the header check.
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "date,ticker,close") {
        throw std::runtime_error(path + ": expected header 'date,ticker,close', got '" + line + "'");
    }

    std::vector<Row> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto c1 = line.find(',');
        auto c2 = (c1 == std::string::npos) ? std::string::npos : line.find(',', c1 + 1);
        if (c2 == std::string::npos) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed row");
        }
        Row row;
        try {
            row.date = Date::parse(line.substr(0, c1));
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        row.ticker = line.substr(c1 + 1, c2 - c1 - 1);
        if (row.ticker.empty()) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": empty ticker");
        }
        std::size_t pos = 0;
        try {
            row.close = std::stod(line.substr(c2 + 1), &pos);
        } catch (const std::exception&) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad close value");
        }
        if (!(row.close > 0.0) || !std::isfinite(row.close)) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": close must be positive and finite");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

MarketFrame load_prices(const std::string& path, const LoadOptions& opts, LoadReport* report) {
    auto rows = parse_csv(path);
    if (rows.empty()) throw std::runtime_error(path + ": no data rows");

    std::set<Date> date_set;
    std::map<std::string, std::map<Date, double>> by_ticker;
    for (const auto& r : rows) {
        date_set.insert(r.date);
        auto [it, inserted] = by_ticker[r.ticker].emplace(r.date, r.close);
        if (!inserted) {
            throw std::runtime_error(path + ": duplicate row for " + r.ticker + " " +
                                     r.date.to_string());
        }
    }

    std::vector<Date> dates(date_set.begin(), date_set.end());

    MarketFrame frame;
    frame.dates = dates;
    for (auto& [ticker, series] : by_ticker) {
        std::vector<double> filled(dates.size());
        bool drop = false;
        double last = 0.0;
        int gap = 0;
        for (std::size_t t = 0; t < dates.size() && !drop; ++t) {
            auto it = series.find(dates[t]);
            if (it != series.end()) {
                filled[t] = last = it->second;
                gap = 0;
            } else if (opts.fill == FillPolicy::Forward && last > 0.0 && ++gap <= opts.max_gap) {
                filled[t] = last;
            } else {
                drop = true;
            }
        }
        if (drop) {
            if (report) report->dropped_tickers.push_back(ticker);
            continue;
        }
        frame.tickers.push_back(ticker);
        frame.closes.insert(frame.closes.end(), filled.begin(), filled.end());
    }

    if (frame.tickers.empty()) {
        throw std::runtime_error(path + ": no company survived the missing-data policy");
    }
    frame.validate();
    return frame;
}

StateWindow make_state(const MarketFrame& frame, std::size_t c, std::size_t t, std::size_t f) {
    if (f < 2) throw std::invalid_argument("make_state: window length must be >= 2");
    if (c >= frame.n_companies()) throw std::out_of_range("make_state: company index");
    if (t >= frame.n_days() || t + 1 < f) {
        throw std::out_of_range("make_state: window does not fit at day " + std::to_string(t));
    }
    StateWindow w;
    w.company = c;
    w.t = t;
    w.values.resize(f);
    const double base = frame.price(c, t - f + 1);
    for (std::size_t k = 0; k < f; ++k) {
        w.values[k] = frame.price(c, t - f + 1 + k) / base - 1.0;
    }
    return w;
}

double daily_return_pct(const MarketFrame& frame, std::size_t c, std::size_t t) {
    if (t + 1 >= frame.n_days()) throw std::out_of_range("daily_return_pct: t+1 out of range");
    const double p0 = frame.price(c, t);
    const double p1 = frame.price(c, t + 1);
    return 100.0 * (p1 - p0) / p0;
}

namespace {

MarketFrame take_range(const MarketFrame& frame, const DateRange& range, const char* name) {
    std::size_t lo = frame.n_days(), hi = 0;
    for (std::size_t t = 0; t < frame.n_days(); ++t) {
        if (range.contains(frame.dates[t])) {
            lo = std::min(lo, t);
            hi = std::max(hi, t + 1);
        }
    }
    if (lo >= hi) throw std::runtime_error(std::string("split: empty ") + name + " range");

    MarketFrame out;
    out.tickers = frame.tickers;
    out.dates.assign(frame.dates.begin() + lo, frame.dates.begin() + hi);
    out.closes.reserve(out.tickers.size() * out.dates.size());
    for (std::size_t c = 0; c < frame.n_companies(); ++c) {
        for (std::size_t t = lo; t < hi; ++t) out.closes.push_back(frame.price(c, t));
    }
    return out;
}

}  // namespace

std::tuple<MarketFrame, MarketFrame, MarketFrame> split(const MarketFrame& frame,
                                                        const SplitSpec& spec) {
    spec.validate();
    return {take_range(frame, spec.train, "train"), take_range(frame, spec.valid, "valid"),
            take_range(frame, spec.test, "test")};
}

MarketFrame synth_market(std::size_t n_companies, std::size_t n_days,
                         const std::vector<Regime>& regimes, std::uint64_t seed,
                         double initial_price, Date start_date) {
    if (n_companies < 1) throw std::invalid_argument("synth_market: need >= 1 company");
    std::size_t total = 0;
    for (const auto& r : regimes) {
        if (r.volatility < 0.0) throw std::invalid_argument("synth_market: negative volatility");
        total += r.length;
    }
    if (total != n_days || n_days == 0) {
        throw std::invalid_argument("synth_market: regime lengths must sum to n_days");
    }

    MarketFrame frame;
    frame.dates.reserve(n_days);
    Date d = start_date;
    for (std::size_t t = 0; t < n_days; ++t, d = d.next()) frame.dates.push_back(d);

    // Per-day regime lookup.
    std::vector<std::size_t> regime_of(n_days);
    std::size_t day = 0;
    for (std::size_t r = 0; r < regimes.size(); ++r) {
        for (std::size_t k = 0; k < regimes[r].length; ++k) regime_of[day++] = r;
    }

    std::mt19937_64 rng(seed);
    frame.closes.resize(n_companies * n_days);
    for (std::size_t c = 0; c < n_companies; ++c) {
        frame.tickers.push_back("SYN" + std::to_string(c));
        double p = initial_price;
        frame.price(c, 0) = p;
        for (std::size_t t = 1; t < n_days; ++t) {
            const Regime& reg = regimes[regime_of[t]];
            p *= std::exp(reg.drift + reg.volatility * gaussian(rng));
            frame.price(c, t) = p;
        }
    }
    frame.validate();
    return frame;
}

void write_prices(const MarketFrame& frame, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(17);
    out << "date,ticker,close\n";
    for (std::size_t c = 0; c < frame.n_companies(); ++c) {
        for (std::size_t t = 0; t < frame.n_days(); ++t) {
            out << frame.dates[t].to_string() << ',' << frame.tickers[c] << ','
                << frame.price(c, t) << '\n';
        }
    }
    if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace maps
