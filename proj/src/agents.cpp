#include "maps/agents.hpp"

#include <cmath>
#include <stdexcept>

#include "maps/rng.hpp"

namespace maps {

std::vector<AgentSpec> build_ensemble(std::size_t K, std::size_t f,
                                      const std::vector<std::size_t>& base_sizes) {
    if (K < 1) throw std::invalid_argument("build_ensemble: K must be >= 1");
    if (base_sizes.empty()) throw std::invalid_argument("build_ensemble: base_sizes empty");

    std::vector<AgentSpec> specs;
    specs.reserve(K);
    for (std::size_t i = 0; i < K; ++i) {
        const std::size_t depth_extra = i % 4;  // extra layers within the block
        AgentSpec spec;
        spec.index = i;
        spec.input_dim = f;
        // Prepend one doubled layer per extra depth step.
        for (std::size_t k = depth_extra; k-- > 0;) {
            spec.hidden_sizes.push_back(base_sizes.front() << (k + 1));
        }
        spec.hidden_sizes.insert(spec.hidden_sizes.end(), base_sizes.begin(), base_sizes.end());
        specs.push_back(std::move(spec));
    }
    return specs;
}

Agent make_agent(const AgentSpec& spec, std::mt19937_64& rng) {
    Agent a;
    a.spec = spec;
    a.online = init_mlp(spec.input_dim, spec.hidden_sizes, spec.output_dim, rng);
    a.target = snapshot(a.online);
    a.adam = AdamState::zeros_like(a.online);
    return a;
}

namespace {

std::vector<QRow> to_rows(const Matrix& out) {
    if (out.cols != 3) throw std::logic_error("q_values: head width must be 3");
    std::vector<QRow> rows(out.rows);
    for (std::size_t r = 0; r < out.rows; ++r) {
        rows[r] = {out.at(r, 0), out.at(r, 1), out.at(r, 2)};
    }
    return rows;
}

}  // namespace

std::vector<QRow> q_values(Agent& agent, WhichNet which, const Matrix& states, Mode mode) {
    MlpParams& params = which == WhichNet::Online ? agent.online : agent.target;
    return to_rows(mlp_forward(params, states, mode));
}

std::vector<QRow> q_values_const(const Agent& agent, WhichNet which, const Matrix& states) {
    const MlpParams& params = which == WhichNet::Online ? agent.online : agent.target;
    return to_rows(mlp_forward_eval(params, states));
}

int greedy_action(const QRow& rho) {
    std::size_t best = 0;
    if (rho[1] > rho[best]) best = 1;
    if (rho[2] > rho[best]) best = 2;
    return 1 - int(best);
}

int epsilon_greedy(const QRow& rho, double epsilon, std::mt19937_64& rng) {
    if (epsilon < 0.0 || epsilon > 1.0) {
        throw std::invalid_argument("epsilon_greedy: epsilon outside [0,1]");
    }
    if (epsilon > 0.0 && uniform01(rng) < epsilon) {
        return 1 - int(uniform_index(rng, 3));
    }
    return greedy_action(rho);
}

double positional_confidence(const QRow& rho) { return rho[0] - rho[2]; }

void sync_target(Agent& agent) { agent.target = snapshot(agent.online); }

}  // namespace maps
