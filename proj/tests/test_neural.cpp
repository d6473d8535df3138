#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <functional>
#include <random>

#include "maps/neural.hpp"
#include "maps/rng.hpp"

using namespace maps;

namespace {

MlpParams zero_mlp(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
    std::mt19937_64 rng(0);
    MlpParams p = init_mlp(in, hidden, out, rng);
    for (auto& lay : p.layers) {
        for (double& w : lay.w) w = 0.0;
        for (double& b : lay.b) b = 0.0;
    }
    return p;
}

Matrix random_batch(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    Matrix m(rows, cols);
    for (double& v : m.d) v = 2.0 * uniform01(rng) - 1.0;
    return m;
}

// Central finite differences of a scalar loss over every trainable tensor.
// The loss re-runs the full train-mode forward, so batch-statistics terms are
// exercised too.
double max_rel_grad_error(MlpParams params, const Matrix& batch,
                          const std::function<double(const Matrix&)>& loss_of_output,
                          const std::function<Matrix(const Matrix&)>& upstream_of_output) {
    const double h = 1e-4;
    MlpParams work = params;
    ForwardTrace trace;
    Matrix out = mlp_forward(work, batch, Mode::Train, &trace);
    MlpGrads analytic = mlp_backward(work, trace, upstream_of_output(out));

    auto eval = [&](MlpParams& p) {
        MlpParams scratch = p;  // keep running stats out of the picture
        return loss_of_output(mlp_forward(scratch, batch, Mode::Train));
    };

    double worst = 0.0;
    auto check_tensor = [&](std::vector<double>& tensor, const std::vector<double>& grad) {
        for (std::size_t i = 0; i < tensor.size(); ++i) {
            const double keep = tensor[i];
            tensor[i] = keep + h;
            const double up = eval(params);
            tensor[i] = keep - h;
            const double down = eval(params);
            tensor[i] = keep;
            const double numeric = (up - down) / (2.0 * h);
            const double denom = std::max({std::fabs(numeric), std::fabs(grad[i]), 1e-6});
            worst = std::max(worst, std::fabs(numeric - grad[i]) / denom);
        }
    };
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        check_tensor(params.layers[l].w, analytic.layers[l].w);
        check_tensor(params.layers[l].b, analytic.layers[l].b);
    }
    for (std::size_t l = 0; l < params.bn.size(); ++l) {
        check_tensor(params.bn[l].gamma, analytic.bn[l].gamma);
        check_tensor(params.bn[l].beta, analytic.bn[l].beta);
    }
    return worst;
}

}  // namespace

TEST_CASE("forward: zero network gives zero output") {
    MlpParams p = zero_mlp(4, {5}, 3);
    std::mt19937_64 rng(1);
    Matrix out = mlp_forward_eval(p, random_batch(3, 4, rng));
    for (double v : out.d) CHECK(v == 0.0);
}

TEST_CASE("forward: identity single layer") {
    MlpParams p = zero_mlp(3, {}, 3);
    for (std::size_t i = 0; i < 3; ++i) p.layers[0].w[i * 3 + i] = 1.0;
    std::mt19937_64 rng(2);
    Matrix x = random_batch(4, 3, rng);
    Matrix out = mlp_forward_eval(p, x);
    CHECK(out == x);
}

TEST_CASE("forward: hand-computed affine/BN/ReLU composition") {
    // One hidden unit on two samples, then a 1->1 head. gamma=2, beta=0.5.
    MlpParams p = zero_mlp(1, {1}, 1);
    p.layers[0].w = {3.0};
    p.layers[0].b = {1.0};
    p.bn[0].gamma = {2.0};
    p.bn[0].beta = {0.5};
    p.layers[1].w = {1.5};
    p.layers[1].b = {-0.25};

    Matrix x(2, 1);
    x.at(0, 0) = 1.0;   // z = 4
    x.at(1, 0) = -1.0;  // z = -2
    // batch mean 1, var 9; xhat = {1, -1} (up to the 1e-5 epsilon);
    // y = {2.5, -1.5}; relu = {2.5, 0}; head = {3.5, -0.25}.
    ForwardTrace trace;
    Matrix out = mlp_forward(p, x, Mode::Train, &trace);
    CHECK(out.at(0, 0) == doctest::Approx(3.5).epsilon(1e-4));
    CHECK(out.at(1, 0) == doctest::Approx(-0.25).epsilon(1e-4));
    // Running stats moved toward the batch statistics with momentum 0.9.
    CHECK(p.bn[0].running_mean[0] == doctest::Approx(0.1));
    CHECK(p.bn[0].running_var[0] == doctest::Approx(0.9 + 0.1 * 9.0));
}

TEST_CASE("forward: train mode rejects batch of one") {
    std::mt19937_64 rng(3);
    MlpParams p = init_mlp(4, {6}, 3, rng);
    Matrix x = random_batch(1, 4, rng);
    CHECK_THROWS_AS(mlp_forward(p, x, Mode::Train), std::invalid_argument);
    CHECK_NOTHROW(mlp_forward_eval(p, x));
}

TEST_CASE("forward: shape mismatch rejected") {
    std::mt19937_64 rng(4);
    MlpParams p = init_mlp(4, {6}, 3, rng);
    Matrix x = random_batch(2, 5, rng);
    CHECK_THROWS_AS(mlp_forward(p, x, Mode::Train), std::invalid_argument);
}

TEST_CASE("forward: eval is batch-size independent per row") {
    std::mt19937_64 rng(5);
    MlpParams p = init_mlp(6, {8, 4}, 3, rng);
    Matrix x = random_batch(5, 6, rng);
    Matrix all = mlp_forward_eval(p, x);
    for (std::size_t r = 0; r < x.rows; ++r) {
        Matrix one(1, 6);
        for (std::size_t c = 0; c < 6; ++c) one.at(0, c) = x.at(r, c);
        Matrix out = mlp_forward_eval(p, one);
        for (std::size_t c = 0; c < 3; ++c) CHECK(out.at(0, c) == all.at(r, c));
    }
}

TEST_CASE("forward: hidden post-activations are non-negative and BN batch stats normalize") {
    std::mt19937_64 rng(6);
    MlpParams p = init_mlp(5, {7, 6}, 3, rng);
    Matrix x = random_batch(8, 5, rng);
    ForwardTrace trace;
    mlp_forward(p, x, Mode::Train, &trace);
    for (const auto& lt : trace.hidden) {
        for (double v : lt.post_act.d) CHECK(v >= 0.0);
        // Normalized pre-gamma/beta activations: mean ~ 0, variance ~ 1.
        const std::size_t B = lt.xhat.rows;
        for (std::size_t j = 0; j < lt.xhat.cols; ++j) {
            double mean = 0.0, ss = 0.0;
            for (std::size_t r = 0; r < B; ++r) mean += lt.xhat.at(r, j);
            mean /= double(B);
            for (std::size_t r = 0; r < B; ++r) {
                ss += (lt.xhat.at(r, j) - mean) * (lt.xhat.at(r, j) - mean);
            }
            CHECK(std::fabs(mean) < 1e-6);
            CHECK(ss / double(B) == doctest::Approx(1.0).epsilon(1e-4));
        }
    }
}

TEST_CASE("backward: zero upstream gives zero gradients") {
    std::mt19937_64 rng(7);
    MlpParams p = init_mlp(4, {5}, 3, rng);
    Matrix x = random_batch(4, 4, rng);
    ForwardTrace trace;
    mlp_forward(p, x, Mode::Train, &trace);
    MlpGrads g = mlp_backward(p, trace, Matrix(4, 3));
    for (const auto& l : g.layers) {
        for (double v : l.w) CHECK(v == 0.0);
        for (double v : l.b) CHECK(v == 0.0);
    }
    for (const auto& s : g.bn) {
        for (double v : s.gamma) CHECK(v == 0.0);
        for (double v : s.beta) CHECK(v == 0.0);
    }
}

TEST_CASE("backward: single linear layer, loss = sum of outputs") {
    MlpParams p = zero_mlp(3, {}, 2);
    std::mt19937_64 rng(8);
    Matrix x = random_batch(4, 3, rng);
    ForwardTrace trace;
    mlp_forward(p, x, Mode::Train, &trace);
    Matrix up(4, 2);
    for (double& v : up.d) v = 1.0;
    MlpGrads g = mlp_backward(p, trace, up);
    // dW[k][j] = sum over the batch of x[.][k].
    for (std::size_t k = 0; k < 3; ++k) {
        double colsum = 0.0;
        for (std::size_t r = 0; r < 4; ++r) colsum += x.at(r, k);
        for (std::size_t j = 0; j < 2; ++j) {
            CHECK(g.layers[0].w[k * 2 + j] == doctest::Approx(colsum));
        }
    }
    for (std::size_t j = 0; j < 2; ++j) CHECK(g.layers[0].b[j] == doctest::Approx(4.0));
}

TEST_CASE("backward: eval-mode trace rejected") {
    std::mt19937_64 rng(9);
    MlpParams p = init_mlp(3, {4}, 2, rng);
    Matrix x = random_batch(3, 3, rng);
    ForwardTrace trace;
    mlp_forward(p, x, Mode::Eval, &trace);
    CHECK_THROWS_AS(mlp_backward(p, trace, Matrix(3, 2)), std::invalid_argument);
}

TEST_CASE("backward: gradient check against central finite differences") {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 5; ++trial) {
        const std::vector<std::vector<std::size_t>> shapes = {{}, {6}, {8, 5}, {4, 4, 4}};
        const auto& hidden = shapes[std::size_t(trial) % shapes.size()];
        const std::size_t in = 3 + std::size_t(trial);
        MlpParams p = init_mlp(in, hidden, 3, rng);
        Matrix x = random_batch(2 + std::size_t(trial), in, rng);

        // Scalar loss: weighted sum of squares of outputs; exercises every
        // output path with a nontrivial upstream gradient.
        auto loss = [](const Matrix& out) {
            double acc = 0.0;
            for (std::size_t i = 0; i < out.d.size(); ++i) {
                acc += (0.3 + 0.1 * double(i % 5)) * out.d[i] * out.d[i];
            }
            return acc;
        };
        auto upstream = [](const Matrix& out) {
            Matrix g(out.rows, out.cols);
            for (std::size_t i = 0; i < out.d.size(); ++i) {
                g.d[i] = 2.0 * (0.3 + 0.1 * double(i % 5)) * out.d[i];
            }
            return g;
        };
        CHECK(max_rel_grad_error(p, x, loss, upstream) < 1e-4);
    }
}

TEST_CASE("adam: zero gradients leave parameters unchanged") {
    std::mt19937_64 rng(11);
    MlpParams p = init_mlp(4, {5}, 3, rng);
    MlpParams before = p;
    AdamState st = AdamState::zeros_like(p);
    adam_step(p, MlpGrads::zeros_like(p), st, {});
    CHECK(p == before);
    CHECK(st.step_count == 1);
}

TEST_CASE("adam: first step moves by ~lr in the gradient sign direction") {
    MlpParams p = zero_mlp(2, {}, 1);
    AdamState st = AdamState::zeros_like(p);
    MlpGrads g = MlpGrads::zeros_like(p);
    g.layers[0].w = {0.5, -0.02};
    AdamHyper h;
    h.lr = 1e-3;
    adam_step(p, g, st, h);
    // After bias correction the first update is -lr * g/(|g| + eps') per
    // element, i.e. about -lr*sign(g).
    CHECK(p.layers[0].w[0] == doctest::Approx(-1e-3).epsilon(1e-4));
    CHECK(p.layers[0].w[1] == doctest::Approx(1e-3).epsilon(1e-4));
}

TEST_CASE("adam: deterministic under fixed inputs") {
    std::mt19937_64 rng(12);
    MlpParams p1 = init_mlp(3, {4}, 2, rng);
    MlpParams p2 = p1;
    AdamState s1 = AdamState::zeros_like(p1), s2 = AdamState::zeros_like(p2);
    MlpGrads g = MlpGrads::zeros_like(p1);
    for (double& v : g.layers[0].w) v = 0.1;
    adam_step(p1, g, s1, {});
    adam_step(p1, g, s1, {});
    adam_step(p2, g, s2, {});
    adam_step(p2, g, s2, {});
    CHECK(p1 == p2);
}

TEST_CASE("adam: non-finite gradient names the layer") {
    std::mt19937_64 rng(13);
    MlpParams p = init_mlp(3, {4}, 2, rng);
    AdamState st = AdamState::zeros_like(p);
    MlpGrads g = MlpGrads::zeros_like(p);
    g.layers[1].w[0] = std::numeric_limits<double>::quiet_NaN();
    const AdamHyper h{};
    CHECK_THROWS_WITH_AS(adam_step(p, g, st, h), doctest::Contains("layer 1"),
                         std::runtime_error);
}

TEST_CASE("snapshot: mutation independence") {
    std::mt19937_64 rng(14);
    MlpParams p = init_mlp(3, {4}, 2, rng);
    MlpParams copy = snapshot(p);
    CHECK(copy == p);
    CHECK(snapshot(copy) == p);
    p.layers[0].w[0] += 1.0;
    CHECK(copy != p);
}
