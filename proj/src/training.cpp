#include "maps/training.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "maps/portfolio.hpp"
#include "maps/rng.hpp"

namespace maps {

double EpsilonSchedule::at(std::uint64_t iter, std::uint64_t maxiter) const {
    const double decay_iters = decay_frac * double(maxiter);
    if (decay_iters <= 0.0 || double(iter) >= decay_iters) return end;
    return start + (end - start) * double(iter) / decay_iters;
}

void TrainConfig::validate() const {
    if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("lambda must be in [0,1]");
    if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("gamma must be in [0,1)");
    if (batch_size < 2) throw std::invalid_argument("batch size must be >= 2");
    if (target_sync < 1) throw std::invalid_argument("target sync period must be >= 1");
    if (epsilon.start < 0.0 || epsilon.start > 1.0 || epsilon.end < 0.0 || epsilon.end > 1.0) {
        throw std::invalid_argument("epsilon schedule outside [0,1]");
    }
    if (!(adam.lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
}

TrainingDiverged::TrainingDiverged(std::uint64_t it, std::size_t ag)
    : std::runtime_error("non-finite loss at iteration " + std::to_string(it) + ", agent " +
                         std::to_string(ag)),
      iteration(it),
      agent(ag) {}

double immediate_reward(int a, double R) {
    if (a != -1 && a != 0 && a != 1) throw std::invalid_argument("action must be -1, 0, or 1");
    return double(a) * R;
}

double total_loss(double local, double global, double lambda) {
    if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("lambda must be in [0,1]");
    return (1.0 - lambda) * local + lambda * global;
}

namespace {

constexpr double kVarFloor = 1e-30;

struct CenteredStats {
    std::vector<double> cx;
    double ss = 0.0;  // sum of squares of centered values
};

CenteredStats center(const std::vector<double>& x) {
    CenteredStats s;
    s.cx.resize(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= double(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        s.cx[i] = x[i] - mean;
        s.ss += s.cx[i] * s.cx[i];
    }
    return s;
}

}  // namespace

CorrResult pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("pearson: need two equal-length series of size >= 2");
    }
    const CenteredStats sx = center(x), sy = center(y);
    if (sx.ss <= kVarFloor || sy.ss <= kVarFloor) return {0.0, true};
    double dot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) dot += sx.cx[i] * sy.cx[i];
    return {dot / std::sqrt(sx.ss * sy.ss), false};
}

bool add_corr_sq_grad(const std::vector<double>& x, const std::vector<double>& y, double weight,
                      std::vector<double>& grad) {
    const CenteredStats sx = center(x), sy = center(y);
    if (sx.ss <= kVarFloor || sy.ss <= kVarFloor) return false;
    double dot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) dot += sx.cx[i] * sy.cx[i];
    const double denom = std::sqrt(sx.ss * sy.ss);
    const double rho = dot / denom;
    // d(rho)/dx_i = cy_i / denom - rho * cx_i / ss_x; centering terms vanish
    // because the centered partner sums to zero.
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double drho = sy.cx[i] / denom - rho * sx.cx[i] / sx.ss;
        grad[i] += weight * 2.0 * rho * drho;
    }
    return true;
}

std::vector<Episode> generate_episode_column(std::vector<Agent>& agents, const MarketFrame& frame,
                                             std::size_t f, double epsilon, std::mt19937_64& rng) {
    if (frame.n_days() < f + 1) {
        throw std::invalid_argument("generate_episode_column: frame shorter than f+1 days");
    }
    const std::size_t c = uniform_index(rng, frame.n_companies());
    // Day t must fit a window and leave a next day; the final day has no s'.
    const std::size_t t = f - 1 + uniform_index(rng, frame.n_days() - f);

    Episode shared;
    shared.s = make_state(frame, c, t, f);
    shared.s_next = make_state(frame, c, t + 1, f);
    shared.company = c;
    shared.t = t;
    const double R = daily_return_pct(frame, c, t);

    Matrix state_row(1, f);
    std::copy(shared.s.values.begin(), shared.s.values.end(), state_row.d.begin());

    std::vector<Episode> column;
    column.reserve(agents.size());
    for (Agent& agent : agents) {
        Episode e = shared;
        const QRow rho = q_values_const(agent, WhichNet::Online, state_row).front();
        e.a = epsilon_greedy(rho, epsilon, rng);
        e.r = immediate_reward(e.a, R);
        column.push_back(std::move(e));
    }
    return column;
}

std::vector<std::vector<Episode>> generate_episodes(std::vector<Agent>& agents,
                                                    const MarketFrame& frame, std::size_t f,
                                                    double epsilon, std::mt19937_64& rng,
                                                    std::size_t count) {
    std::vector<std::vector<Episode>> columns;
    columns.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        columns.push_back(generate_episode_column(agents, frame, f, epsilon, rng));
    }
    return columns;
}

std::vector<std::vector<double>> target_confidences(const std::vector<Agent>& agents,
                                                    const Matrix& states, bool parallel) {
    std::vector<std::vector<double>> etas(agents.size());
#pragma omp parallel for schedule(static) if (parallel)
    for (std::ptrdiff_t j = 0; j < std::ptrdiff_t(agents.size()); ++j) {
        const Matrix q = mlp_forward_eval(agents[std::size_t(j)].target, states);
        std::vector<double>& eta = etas[std::size_t(j)];
        eta.resize(q.rows);
        for (std::size_t b = 0; b < q.rows; ++b) eta[b] = q.at(b, 0) - q.at(b, 2);
    }
    return etas;
}

namespace {

// QRow column index for an action value.
std::size_t action_index(int a) { return std::size_t(1 - a); }

}  // namespace

AgentLossResult compute_agent_loss(Agent& agent, std::size_t i, const BatchMatrix& batch,
                                   const Matrix& states, const Matrix& next_states,
                                   const std::vector<std::vector<double>>& eta_targets,
                                   const TrainConfig& cfg) {
    const std::size_t beta = batch.batch_size;

    // Bootstrap targets from the agent's own target network.
    const Matrix q_next = mlp_forward_eval(agent.target, next_states);

    ForwardTrace trace;
    const Matrix q = mlp_forward(agent.online, states, Mode::Train, &trace);

    AgentLossResult res;
    Matrix upstream(beta, 3);

    // Local TD loss (Eq. 3/4 region): delta per batch column, gradient only
    // through the online Q of the taken action.
    for (std::size_t b = 0; b < beta; ++b) {
        const Episode& e = batch.at(i, b);
        const double max_next = std::max({q_next.at(b, 0), q_next.at(b, 1), q_next.at(b, 2)});
        const std::size_t ai = action_index(e.a);
        const double delta = cfg.td_printed_form
                                 ? q.at(b, ai) - e.r + cfg.gamma * max_next
                                 : q.at(b, ai) - (e.r + cfg.gamma * max_next);
        res.local += delta * delta;
        upstream.at(b, ai) += (1.0 - cfg.lambda) * 2.0 * delta;
    }

    // Global decorrelation loss against the other agents' target confidences.
    if (eta_targets.size() > 1) {
        std::vector<double> eta(beta);
        for (std::size_t b = 0; b < beta; ++b) eta[b] = q.at(b, 0) - q.at(b, 2);
        std::vector<double> deta(beta, 0.0);
        for (std::size_t j = 0; j < eta_targets.size(); ++j) {
            if (j == i) continue;
            const CorrResult c = pearson(eta, eta_targets[j]);
            if (c.degenerate) {
                ++res.degenerate_pairs;
                continue;
            }
            res.global += c.corr * c.corr;
            add_corr_sq_grad(eta, eta_targets[j], 1.0, deta);
        }
        for (std::size_t b = 0; b < beta; ++b) {
            upstream.at(b, 0) += cfg.lambda * deta[b];
            upstream.at(b, 2) -= cfg.lambda * deta[b];
        }
    }

    res.total = total_loss(res.local, res.global, cfg.lambda);
    res.grads = mlp_backward(agent.online, trace, upstream);
    return res;
}

namespace {

Matrix batch_states(const BatchMatrix& batch, bool next) {
    const std::size_t beta = batch.batch_size;
    const std::size_t f = batch.at(0, 0).s.values.size();
    Matrix m(beta, f);
    for (std::size_t b = 0; b < beta; ++b) {
        const Episode& e = batch.at(0, b);
        const std::vector<double>& v = next ? e.s_next.values : e.s.values;
        std::copy(v.begin(), v.end(), m.d.begin() + std::ptrdiff_t(b * f));
    }
    return m;
}

void write_csv_row(std::ostream& out, const LossReport& r) {
    out << r.iteration << ',' << r.agent << ',' << r.local_loss << ',' << r.global_loss << ','
        << r.total_loss << ',' << r.epsilon << ',';
    if (r.mean_pairwise_corr) out << *r.mean_pairwise_corr;
    out << '\n';
}

}  // namespace

TrainLog train(std::vector<Agent>& agents, const MarketFrame& frame, MemoryBuffer& buffer,
               const TrainConfig& cfg, const MarketFrame* probe_frame, std::ostream* log_csv) {
    cfg.validate();
    if (agents.empty()) throw std::invalid_argument("train: no agents");
    if (buffer.n_agents() != agents.size()) {
        throw std::invalid_argument("train: buffer row count != agent count");
    }
    const std::size_t K = agents.size();
    const std::size_t f = agents.front().spec.input_dim;
    if (frame.n_days() < f + 1) throw std::invalid_argument("train: frame shorter than f+1 days");

    std::mt19937_64 rng(cfg.seed);
    TrainLog log;
    if (log_csv) {
        (*log_csv) << "iteration,agent,local_loss,global_loss,total_loss,epsilon,"
                      "mean_pairwise_corr\n";
        log_csv->precision(17);
    }

    std::vector<AgentLossResult> results(K);
    for (std::uint64_t iter = 0; iter < cfg.maxiter; ++iter) {
        const double eps = cfg.epsilon.at(iter, cfg.maxiter);
        buffer.store(generate_episode_column(agents, frame, f, eps, rng));
        const BatchMatrix batch = sample_batch(buffer, cfg.batch_size, rng);
        const Matrix states = batch_states(batch, false);
        const Matrix next_states = batch_states(batch, true);
        const auto eta_targets = target_confidences(agents, states, cfg.parallel);

        // Per-agent work is independent: each agent reads only its own online
        // network plus the frozen targets gathered above.
#pragma omp parallel for schedule(dynamic) if (cfg.parallel)
        for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(K); ++i) {
            Agent& agent = agents[std::size_t(i)];
            results[std::size_t(i)] =
                compute_agent_loss(agent, std::size_t(i), batch, states, next_states, eta_targets,
                                   cfg);
            adam_step(agent.online, results[std::size_t(i)].grads, agent.adam, cfg.adam);
        }

        for (std::size_t i = 0; i < K; ++i) {
            if (!std::isfinite(results[i].total)) throw TrainingDiverged(iter, i);
            log.degenerate_corr_pairs += results[i].degenerate_pairs;
        }

        if ((iter + 1) % cfg.target_sync == 0) {
            for (Agent& agent : agents) sync_target(agent);
        }

        const bool probe_now =
            probe_frame && K >= 2 &&
            ((iter + 1) % cfg.probe_every == 0 || iter + 1 == cfg.maxiter);
        std::optional<double> probe;
        if (probe_now) {
            probe = confidence_correlation_probe(agents, *probe_frame, f);
            log.final_probe_corr = probe;
        }

        if (iter % cfg.log_every == 0 || iter + 1 == cfg.maxiter || probe_now) {
            for (std::size_t i = 0; i < K; ++i) {
                LossReport r;
                r.iteration = iter;
                r.agent = i;
                r.local_loss = results[i].local;
                r.global_loss = results[i].global;
                r.total_loss = results[i].total;
                r.epsilon = eps;
                if (i == 0) r.mean_pairwise_corr = probe;
                log.entries.push_back(r);
                if (log_csv) write_csv_row(*log_csv, log.entries.back());
            }
        }
    }
    return log;
}

}  // namespace maps
