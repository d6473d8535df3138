#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "maps/agents.hpp"

namespace maps {

// Versioned textual checkpoints. Doubles are written as hexfloats, so a
// save/load round trip reproduces every parameter bit for bit.

void save_mlp(std::ostream& out, const MlpParams& params);
MlpParams load_mlp(std::istream& in);

void save_agent(const std::string& path, const Agent& agent);
Agent load_agent(const std::string& path);

// Directory layout: manifest.txt plus agent_<i>.ckpt per agent.
void save_ensemble(const std::string& dir, const std::vector<Agent>& agents,
                   std::uint64_t iterations);

struct EnsembleCheckpoint {
    std::vector<Agent> agents;
    std::uint64_t iterations = 0;
};

EnsembleCheckpoint load_ensemble(const std::string& dir);

}  // namespace maps
