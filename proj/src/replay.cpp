#include "maps/replay.hpp"

#include <stdexcept>

#include "maps/rng.hpp"

namespace maps {

MemoryBuffer::MemoryBuffer(std::size_t n_agents, std::size_t capacity)
    : n_agents_(n_agents), capacity_(capacity), slots_(n_agents * capacity) {
    if (n_agents == 0 || capacity == 0) {
        throw std::invalid_argument("MemoryBuffer: agents and capacity must be positive");
    }
}

void MemoryBuffer::store(const std::vector<Episode>& column) {
    if (column.size() != n_agents_) {
        throw std::invalid_argument("store: column must hold one episode per agent");
    }
    const Episode& head = column.front();
    for (const Episode& e : column) {
        if (e.s != head.s || e.s_next != head.s_next || e.company != head.company ||
            e.t != head.t) {
            throw std::invalid_argument("store: rows disagree on the shared state");
        }
        if (e.s_next.t != e.s.t + 1 || e.s_next.company != e.s.company) {
            throw std::invalid_argument("store: s_next is not the consecutive window");
        }
    }
    for (std::size_t i = 0; i < n_agents_; ++i) slots_[i * capacity_ + cursor_] = column[i];
    cursor_ = (cursor_ + 1) % capacity_;
    if (fill_ < capacity_) ++fill_;
}

const Episode& MemoryBuffer::at(std::size_t agent, std::size_t column) const {
    if (agent >= n_agents_ || column >= fill_) throw std::out_of_range("MemoryBuffer::at");
    return slots_[agent * capacity_ + column];
}

BatchMatrix sample_batch(const MemoryBuffer& buffer, std::size_t batch_size,
                         std::mt19937_64& rng) {
    if (buffer.fill_count() == 0) throw std::runtime_error("sample_batch: buffer is empty");
    if (batch_size == 0) throw std::invalid_argument("sample_batch: batch size must be positive");

    BatchMatrix batch;
    batch.n_agents = buffer.n_agents();
    batch.batch_size = batch_size;
    batch.r_vec.reserve(batch_size);
    for (std::size_t b = 0; b < batch_size; ++b) {
        batch.r_vec.push_back(uniform_index(rng, buffer.fill_count()));
    }
    batch.episodes.resize(batch.n_agents * batch_size);
    for (std::size_t i = 0; i < batch.n_agents; ++i) {
        for (std::size_t b = 0; b < batch_size; ++b) {
            batch.episodes[i * batch_size + b] = &buffer.at(i, batch.r_vec[b]);
        }
    }
    return batch;
}

}  // namespace maps
