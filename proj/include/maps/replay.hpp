#pragma once

#include <random>
#include <vector>

#include "maps/market_data.hpp"

namespace maps {

// One agent's transition for one (company, day).
struct Episode {
    StateWindow s;
    int a = 0;        // +1 long, 0 neutral, -1 short
    double r = 0.0;   // percent reward
    StateWindow s_next;
    std::size_t company = 0;
    std::size_t t = 0;
};

// K x M circular buffer. Every occupied column shares one market state across
// all K agent rows; only actions and rewards differ per row.
class MemoryBuffer {
public:
    MemoryBuffer(std::size_t n_agents, std::size_t capacity);

    // Writes one column of K episodes at the cursor; overwrites the oldest
    // column once full. Throws if rows disagree on the shared state.
    void store(const std::vector<Episode>& column);

    std::size_t n_agents() const { return n_agents_; }
    std::size_t capacity() const { return capacity_; }
    std::size_t fill_count() const { return fill_; }

    const Episode& at(std::size_t agent, std::size_t column) const;

    // Column index of the m-th oldest occupied column.
    std::size_t oldest_offset() const { return fill_ < capacity_ ? 0 : cursor_; }

private:
    std::size_t n_agents_;
    std::size_t capacity_;
    std::size_t cursor_ = 0;
    std::size_t fill_ = 0;
    std::vector<Episode> slots_;  // n_agents_ x capacity_, row-major
};

struct BatchMatrix {
    std::size_t n_agents = 0;
    std::size_t batch_size = 0;
    std::vector<std::size_t> r_vec;      // buffer columns drawn, length batch_size
    std::vector<const Episode*> episodes;  // n_agents x batch_size, row-major

    const Episode& at(std::size_t agent, std::size_t b) const {
        return *episodes[agent * batch_size + b];
    }
};

// Draws r_vec once, uniform with replacement over occupied columns, and
// applies the same indices to every agent row. The batch borrows episode
// storage from the buffer; do not store into the buffer while a batch is live.
BatchMatrix sample_batch(const MemoryBuffer& buffer, std::size_t batch_size,
                         std::mt19937_64& rng);

}  // namespace maps
