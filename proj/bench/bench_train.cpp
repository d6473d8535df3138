// Throughput comparison of the serial and OpenMP training paths on a
// desk-scale synthetic market. Both paths produce identical results; this
// only measures iterations per second.

#include <chrono>
#include <cstdio>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "maps/run.hpp"

namespace {

double run_iters(bool parallel, std::uint64_t iters, const maps::MarketFrame& frame) {
    maps::TrainConfig cfg;
    cfg.maxiter = iters;
    cfg.batch_size = 64;
    cfg.target_sync = 100;
    cfg.seed = 7;
    cfg.parallel = parallel;
    cfg.log_every = iters;  // keep logging out of the measurement
    cfg.probe_every = iters + 1;

    std::mt19937_64 rng(cfg.seed);
    std::vector<maps::Agent> agents;
    for (const auto& spec : maps::build_ensemble(4, 30)) {
        agents.push_back(maps::make_agent(spec, rng));
    }
    maps::MemoryBuffer buffer(agents.size(), 10000);

    const auto start = std::chrono::steady_clock::now();
    maps::train(agents, frame, buffer, cfg);
    const auto stop = std::chrono::steady_clock::now();
    return double(iters) / std::chrono::duration<double>(stop - start).count();
}

}  // namespace

int main(int argc, char** argv) {
    const std::uint64_t iters = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 200;
    const maps::MarketFrame frame =
        maps::synth_market(20, 600, {{0.0003, 0.015, 600}}, 11);

#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads %d\n", omp_get_max_threads());
#else
    std::printf("built without OpenMP; both runs are serial\n");
#endif

    const double serial = run_iters(false, iters, frame);
    const double parallel = run_iters(true, iters, frame);
    std::printf("%-10s %10.1f iters/s\n", "serial", serial);
    std::printf("%-10s %10.1f iters/s\n", "parallel", parallel);
    std::printf("speedup    %10.2fx\n", parallel / serial);
    return 0;
}
