#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "maps/replay.hpp"

using namespace maps;

namespace {

std::vector<Episode> column_for(std::size_t K, std::size_t company, std::size_t t,
                                double price_tag) {
    std::vector<Episode> col(K);
    for (std::size_t i = 0; i < K; ++i) {
        Episode& e = col[i];
        e.s.values = {0.0, price_tag};
        e.s.company = company;
        e.s.t = t;
        e.s_next.values = {0.0, price_tag + 1.0};
        e.s_next.company = company;
        e.s_next.t = t + 1;
        e.company = company;
        e.t = t;
        e.a = int(i % 3) - 1;  // actions may differ per row
        e.r = double(i);
    }
    return col;
}

}  // namespace

TEST_CASE("store: fill count and circular overwrite") {
    const std::size_t M = 4;
    MemoryBuffer buf(2, M);
    buf.store(column_for(2, 0, 1, 0.1));
    CHECK(buf.fill_count() == 1);

    for (std::size_t m = 1; m <= M; ++m) buf.store(column_for(2, 0, m + 1, double(m)));
    CHECK(buf.fill_count() == M);
    // M+1 stores happened: the first column is gone, its slot now holds the
    // newest one.
    bool found_first = false, found_last = false;
    for (std::size_t m = 0; m < M; ++m) {
        if (buf.at(0, m).s.values[1] == 0.1) found_first = true;
        if (buf.at(0, m).s.values[1] == double(M)) found_last = true;
    }
    CHECK_FALSE(found_first);
    CHECK(found_last);
}

TEST_CASE("store: mismatched shared state rejected") {
    MemoryBuffer buf(2, 8);
    auto col = column_for(2, 0, 1, 0.5);
    col[1].s.values[1] = 99.0;
    CHECK_THROWS_AS(buf.store(col), std::invalid_argument);

    auto bad_next = column_for(2, 0, 1, 0.5);
    for (auto& e : bad_next) e.s_next.t = e.s.t + 2;
    CHECK_THROWS_AS(buf.store(bad_next), std::invalid_argument);

    CHECK_THROWS_AS(buf.store(column_for(3, 0, 1, 0.5)), std::invalid_argument);
}

TEST_CASE("sample_batch: single occupied column repeats") {
    MemoryBuffer buf(3, 16);
    buf.store(column_for(3, 2, 5, 1.5));
    std::mt19937_64 rng(1);
    BatchMatrix batch = sample_batch(buf, 4, rng);
    for (std::size_t b = 0; b < 4; ++b) {
        CHECK(batch.r_vec[b] == 0);
        for (std::size_t i = 0; i < 3; ++i) CHECK(batch.at(i, b).s.values[1] == 1.5);
    }
}

TEST_CASE("sample_batch: column alignment across agents") {
    const std::size_t K = 4;
    MemoryBuffer buf(K, 32);
    std::mt19937_64 rng(2);
    for (std::size_t m = 0; m < 20; ++m) buf.store(column_for(K, m % 3, m + 1, double(m)));
    BatchMatrix batch = sample_batch(buf, 16, rng);
    for (std::size_t b = 0; b < batch.batch_size; ++b) {
        for (std::size_t i = 1; i < K; ++i) {
            CHECK(batch.at(i, b).s == batch.at(0, b).s);
            CHECK(batch.at(i, b).s_next == batch.at(0, b).s_next);
        }
    }
}

TEST_CASE("sample_batch: empty buffer rejected; fixed seed reproducible") {
    MemoryBuffer buf(2, 8);
    std::mt19937_64 rng(3);
    CHECK_THROWS_AS(sample_batch(buf, 4, rng), std::runtime_error);

    for (std::size_t m = 0; m < 6; ++m) buf.store(column_for(2, 0, m + 1, double(m)));
    std::mt19937_64 a(7), b(7);
    CHECK(sample_batch(buf, 8, a).r_vec == sample_batch(buf, 8, b).r_vec);
}

TEST_CASE("sample_batch: uniform marginals over occupied columns") {
    MemoryBuffer buf(1, 10);
    for (std::size_t m = 0; m < 10; ++m) buf.store(column_for(1, 0, m + 1, double(m)));
    std::mt19937_64 rng(4);
    std::vector<int> counts(10, 0);
    const std::size_t draws = 100000;
    for (std::size_t k = 0; k < draws / 10; ++k) {
        for (std::size_t idx : sample_batch(buf, 10, rng).r_vec) ++counts[idx];
    }
    for (int c : counts) {
        CHECK(std::fabs(double(c) / double(draws) - 0.1) < 0.002);
    }
}

TEST_CASE("property: alignment survives 1000 random store/sample cycles") {
    const std::size_t K = 3;
    MemoryBuffer buf(K, 64);
    std::mt19937_64 rng(5);
    std::size_t violations = 0;
    for (std::size_t cycle = 0; cycle < 1000; ++cycle) {
        buf.store(column_for(K, cycle % 7, cycle + 1, double(rng() % 1000)));
        BatchMatrix batch = sample_batch(buf, 8, rng);
        for (std::size_t b = 0; b < batch.batch_size; ++b) {
            for (std::size_t i = 1; i < K; ++i) {
                if (!(batch.at(i, b).s == batch.at(0, b).s) ||
                    !(batch.at(i, b).s_next == batch.at(0, b).s_next)) {
                    ++violations;
                }
            }
        }
    }
    CHECK(violations == 0);
}
