#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "maps/agents.hpp"
#include "maps/replay.hpp"

namespace maps {

struct EpsilonSchedule {
    double start = 1.0;
    double end = 0.1;
    double decay_frac = 0.25;  // fraction of maxiter spent decaying linearly

    double at(std::uint64_t iter, std::uint64_t maxiter) const;
};

struct TrainConfig {
    std::uint64_t maxiter = 400000;
    std::size_t batch_size = 128;      // beta
    std::uint64_t target_sync = 1000;  // C
    double lambda = 0.8;
    double gamma = 0.99;
    AdamHyper adam{};                  // lr defaults to 1e-5
    EpsilonSchedule epsilon{};
    std::uint64_t seed = 0;
    // TD target form. The default subtracts the full bootstrap target
    // (Q - (r + gamma*max Q')); the alternative keeps the sign layout of the
    // published formula (Q - r + gamma*max Q') for fidelity experiments.
    bool td_printed_form = false;
    std::uint64_t probe_every = 1000;
    std::uint64_t log_every = 1;
    bool parallel = true;

    void validate() const;
};

struct LossReport {
    std::uint64_t iteration = 0;
    std::size_t agent = 0;
    double local_loss = 0.0;
    double global_loss = 0.0;
    double total_loss = 0.0;
    double epsilon = 0.0;
    // Mean pairwise confidence correlation on the probe frame; set only on
    // probe iterations.
    std::optional<double> mean_pairwise_corr;
};

struct TrainLog {
    std::vector<LossReport> entries;
    std::uint64_t degenerate_corr_pairs = 0;  // zero-variance pairs skipped in the global loss
    std::optional<double> final_probe_corr;
};

// Aborted on a non-finite loss; carries where it happened.
struct TrainingDiverged : std::runtime_error {
    std::uint64_t iteration;
    std::size_t agent;
    TrainingDiverged(std::uint64_t it, std::size_t ag);
};

// r = a * R  (Eq.-style position times next-day percent return).
double immediate_reward(int a, double R);

// (1-lambda)*local + lambda*global.
double total_loss(double local, double global, double lambda);

struct CorrResult {
    double corr = 0.0;
    bool degenerate = false;  // zero variance on either side
};

// Pearson correlation with population (1/n) moments.
CorrResult pearson(const std::vector<double>& x, const std::vector<double>& y);

// Accumulates weight * d(corr(x,y)^2)/dx into grad; y is held constant.
// Degenerate pairs contribute nothing and report false.
bool add_corr_sq_grad(const std::vector<double>& x, const std::vector<double>& y, double weight,
                      std::vector<double>& grad);

// One column of agent transitions for a uniformly drawn (company, day).
std::vector<Episode> generate_episode_column(std::vector<Agent>& agents, const MarketFrame& frame,
                                             std::size_t f, double epsilon, std::mt19937_64& rng);

std::vector<std::vector<Episode>> generate_episodes(std::vector<Agent>& agents,
                                                    const MarketFrame& frame, std::size_t f,
                                                    double epsilon, std::mt19937_64& rng,
                                                    std::size_t count);

struct AgentLossResult {
    double local = 0.0;
    double global = 0.0;
    double total = 0.0;
    std::size_t degenerate_pairs = 0;
    MlpGrads grads;
};

// Loss_i and its gradient for one agent on a shared batch. `states` /
// `next_states` are the beta x f matrices common to all agents;
// `eta_targets[j]` is agent j's target-network confidence vector over the
// batch columns. Gradients flow through agent i's online network only.
AgentLossResult compute_agent_loss(Agent& agent, std::size_t i, const BatchMatrix& batch,
                                   const Matrix& states, const Matrix& next_states,
                                   const std::vector<std::vector<double>>& eta_targets,
                                   const TrainConfig& cfg);

// Target-network confidence vectors over the batch states, one per agent.
std::vector<std::vector<double>> target_confidences(const std::vector<Agent>& agents,
                                                    const Matrix& states, bool parallel);

// Full training loop (episode generation, shared-state replay, per-agent
// gradient steps, periodic target sync). Deterministic for a fixed config and
// seed regardless of the parallel flag. If log_csv is given, rows of
// `iteration,agent,local_loss,global_loss,total_loss,epsilon,mean_pairwise_corr`
// are appended (header included).
TrainLog train(std::vector<Agent>& agents, const MarketFrame& frame, MemoryBuffer& buffer,
               const TrainConfig& cfg, const MarketFrame* probe_frame = nullptr,
               std::ostream* log_csv = nullptr);

}  // namespace maps
