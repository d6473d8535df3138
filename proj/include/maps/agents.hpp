#pragma once

#include <array>
#include <random>
#include <vector>

#include "maps/neural.hpp"

namespace maps {

// Action encoding: Long=+1, Neutral=0, Short=-1. QRow order is
// [Long, Neutral, Short], so action = 1 - argmax.
using QRow = std::array<double, 3>;

struct AgentSpec {
    std::size_t index = 0;
    std::vector<std::size_t> hidden_sizes;
    std::size_t input_dim = 0;
    std::size_t output_dim = 3;
};

struct Agent {
    AgentSpec spec;
    MlpParams online;  // theta
    MlpParams target;  // theta*
    AdamState adam;
};

enum class WhichNet { Online, Target };

// Layer-width pattern per block of four agents, doubling from base_sizes:
// [32,16], [64,32,16], [128,64,32,16], [256,128,64,32,16]; repeats for K>4.
std::vector<AgentSpec> build_ensemble(std::size_t K, std::size_t f,
                                      const std::vector<std::size_t>& base_sizes = {32, 16});

// Fresh agent with independently seeded parameters; target starts as a copy
// of online.
Agent make_agent(const AgentSpec& spec, std::mt19937_64& rng);

// Batched Q-rows through the selected parameter set.
std::vector<QRow> q_values(Agent& agent, WhichNet which, const Matrix& states, Mode mode);
std::vector<QRow> q_values_const(const Agent& agent, WhichNet which, const Matrix& states);

// Ties break toward the lowest index (Long over Neutral over Short).
int greedy_action(const QRow& rho);

int epsilon_greedy(const QRow& rho, double epsilon, std::mt19937_64& rng);

// eta = rho[Long] - rho[Short].
double positional_confidence(const QRow& rho);

void sync_target(Agent& agent);

}  // namespace maps
