#include "maps/neural.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "maps/rng.hpp"

namespace maps {

void MlpParams::validate() const {
    if (layers.empty()) throw std::invalid_argument("MlpParams: no layers");
    if (bn.size() + 1 != layers.size()) {
        throw std::invalid_argument("MlpParams: batch-norm count must be layers-1");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& lay = layers[l];
        if (lay.w.size() != lay.in * lay.out || lay.b.size() != lay.out) {
            throw std::invalid_argument("MlpParams: layer " + std::to_string(l) + " shape mismatch");
        }
        if (l + 1 < layers.size() && lay.out != layers[l + 1].in) {
            throw std::invalid_argument("MlpParams: layer dimensions do not chain at layer " +
                                        std::to_string(l));
        }
        if (l < bn.size()) {
            const auto& s = bn[l];
            if (s.gamma.size() != lay.out || s.beta.size() != lay.out ||
                s.running_mean.size() != lay.out || s.running_var.size() != lay.out) {
                throw std::invalid_argument("MlpParams: batch-norm " + std::to_string(l) +
                                            " shape mismatch");
            }
            for (double v : s.running_var) {
                if (!(v > 0.0)) throw std::invalid_argument("MlpParams: running_var must stay > 0");
            }
        }
    }
}

MlpParams init_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden_sizes,
                   std::size_t output_dim, std::mt19937_64& rng) {
    std::vector<std::size_t> dims;
    dims.push_back(input_dim);
    dims.insert(dims.end(), hidden_sizes.begin(), hidden_sizes.end());
    dims.push_back(output_dim);

    MlpParams p;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        DenseLayer lay;
        lay.in = dims[l];
        lay.out = dims[l + 1];
        lay.w.resize(lay.in * lay.out);
        lay.b.assign(lay.out, 0.0);
        const double limit = std::sqrt(6.0 / double(lay.in));
        for (double& w : lay.w) w = (2.0 * uniform01(rng) - 1.0) * limit;
        p.layers.push_back(std::move(lay));
    }
    for (std::size_t l = 0; l + 1 < p.layers.size(); ++l) {
        BatchNorm s;
        const std::size_t n = p.layers[l].out;
        s.gamma.assign(n, 1.0);
        s.beta.assign(n, 0.0);
        s.running_mean.assign(n, 0.0);
        s.running_var.assign(n, 1.0);
        p.bn.push_back(std::move(s));
    }
    p.validate();
    return p;
}

namespace {

// out(BxN) = x(BxM) * w(MxN) + b
Matrix affine(const Matrix& x, const DenseLayer& lay) {
    Matrix out(x.rows, lay.out);
    for (std::size_t r = 0; r < x.rows; ++r) {
        double* orow = &out.d[r * lay.out];
        for (std::size_t j = 0; j < lay.out; ++j) orow[j] = lay.b[j];
        const double* xrow = &x.d[r * lay.in];
        for (std::size_t k = 0; k < lay.in; ++k) {
            const double xv = xrow[k];
            const double* wrow = &lay.w[k * lay.out];
            for (std::size_t j = 0; j < lay.out; ++j) orow[j] += xv * wrow[j];
        }
    }
    return out;
}

}  // namespace

Matrix mlp_forward(MlpParams& params, const Matrix& batch, Mode mode, ForwardTrace* trace,
                   const BnHyper& bnh) {
    if (batch.cols != params.input_dim()) {
        throw std::invalid_argument("mlp_forward: batch width " + std::to_string(batch.cols) +
                                    " != input dim " + std::to_string(params.input_dim()));
    }
    if (mode == Mode::Train && batch.rows < 2) {
        throw std::invalid_argument("mlp_forward: train mode needs batch size >= 2");
    }
    if (trace) {
        trace->mode = mode;
        trace->batch = batch.rows;
        trace->hidden.clear();
    }

    const std::size_t B = batch.rows;
    Matrix x = batch;
    for (std::size_t l = 0; l + 1 < params.layers.size(); ++l) {
        Matrix z = affine(x, params.layers[l]);
        const std::size_t n = params.layers[l].out;
        BatchNorm& s = params.bn[l];

        std::vector<double> mean(n), var(n);
        if (mode == Mode::Train) {
            for (std::size_t j = 0; j < n; ++j) {
                double mu = 0.0;
                for (std::size_t r = 0; r < B; ++r) mu += z.at(r, j);
                mu /= double(B);
                double v = 0.0;
                for (std::size_t r = 0; r < B; ++r) {
                    const double c = z.at(r, j) - mu;
                    v += c * c;
                }
                v /= double(B);
                mean[j] = mu;
                var[j] = v;
                s.running_mean[j] = bnh.momentum * s.running_mean[j] + (1.0 - bnh.momentum) * mu;
                s.running_var[j] = bnh.momentum * s.running_var[j] + (1.0 - bnh.momentum) * v;
            }
        } else {
            mean = s.running_mean;
            var = s.running_var;
        }

        Matrix xhat(B, n), act(B, n);
        for (std::size_t j = 0; j < n; ++j) {
            const double invstd = 1.0 / std::sqrt(var[j] + bnh.eps);
            for (std::size_t r = 0; r < B; ++r) {
                const double h = (z.at(r, j) - mean[j]) * invstd;
                xhat.at(r, j) = h;
                const double y = s.gamma[j] * h + s.beta[j];
                act.at(r, j) = y > 0.0 ? y : 0.0;
            }
        }
        if (trace) {
            LayerTrace lt;
            lt.input = std::move(x);
            lt.xhat = xhat;
            lt.post_act = act;
            lt.mean = std::move(mean);
            lt.var = std::move(var);
            trace->hidden.push_back(std::move(lt));
        }
        x = std::move(act);
    }

    if (trace) trace->head_input = x;
    return affine(x, params.layers.back());
}

Matrix mlp_forward_eval(const MlpParams& params, const Matrix& batch, const BnHyper& bnh) {
    // Eval mode never writes; the const_cast is confined here.
    return mlp_forward(const_cast<MlpParams&>(params), batch, Mode::Eval, nullptr, bnh);
}

MlpGrads MlpGrads::zeros_like(const MlpParams& params) {
    MlpGrads g;
    for (const auto& lay : params.layers) {
        g.layers.push_back({std::vector<double>(lay.w.size(), 0.0),
                            std::vector<double>(lay.b.size(), 0.0)});
    }
    for (const auto& s : params.bn) {
        g.bn.push_back({std::vector<double>(s.gamma.size(), 0.0),
                        std::vector<double>(s.beta.size(), 0.0)});
    }
    return g;
}

void MlpGrads::accumulate(const MlpGrads& other) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
        for (std::size_t i = 0; i < layers[l].w.size(); ++i) layers[l].w[i] += other.layers[l].w[i];
        for (std::size_t i = 0; i < layers[l].b.size(); ++i) layers[l].b[i] += other.layers[l].b[i];
    }
    for (std::size_t l = 0; l < bn.size(); ++l) {
        for (std::size_t i = 0; i < bn[l].gamma.size(); ++i) bn[l].gamma[i] += other.bn[l].gamma[i];
        for (std::size_t i = 0; i < bn[l].beta.size(); ++i) bn[l].beta[i] += other.bn[l].beta[i];
    }
}

void MlpGrads::scale(double k) {
    for (auto& l : layers) {
        for (double& v : l.w) v *= k;
        for (double& v : l.b) v *= k;
    }
    for (auto& s : bn) {
        for (double& v : s.gamma) v *= k;
        for (double& v : s.beta) v *= k;
    }
}

MlpGrads mlp_backward(const MlpParams& params, const ForwardTrace& trace,
                      const Matrix& upstream_grad, const BnHyper& bnh) {
    if (trace.mode != Mode::Train) {
        throw std::invalid_argument("mlp_backward: trace must come from a train-mode forward");
    }
    const std::size_t B = trace.batch;
    if (upstream_grad.rows != B || upstream_grad.cols != params.output_dim()) {
        throw std::invalid_argument("mlp_backward: upstream gradient shape mismatch");
    }

    MlpGrads g = MlpGrads::zeros_like(params);

    // Head affine.
    const DenseLayer& head = params.layers.back();
    const Matrix& hx = trace.head_input;
    auto& hg = g.layers.back();
    for (std::size_t r = 0; r < B; ++r) {
        for (std::size_t k = 0; k < head.in; ++k) {
            const double xv = hx.at(r, k);
            for (std::size_t j = 0; j < head.out; ++j) {
                hg.w[k * head.out + j] += xv * upstream_grad.at(r, j);
            }
        }
        for (std::size_t j = 0; j < head.out; ++j) hg.b[j] += upstream_grad.at(r, j);
    }
    Matrix dx(B, head.in);
    for (std::size_t r = 0; r < B; ++r) {
        for (std::size_t k = 0; k < head.in; ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j < head.out; ++j) {
                acc += upstream_grad.at(r, j) * head.w[k * head.out + j];
            }
            dx.at(r, k) = acc;
        }
    }

    for (std::size_t li = trace.hidden.size(); li-- > 0;) {
        const LayerTrace& lt = trace.hidden[li];
        const DenseLayer& lay = params.layers[li];
        const BatchNorm& s = params.bn[li];
        const std::size_t n = lay.out;

        // ReLU mask, then gamma/beta grads and dxhat.
        Matrix dxhat(B, n);
        for (std::size_t j = 0; j < n; ++j) {
            double dgamma = 0.0, dbeta = 0.0;
            for (std::size_t r = 0; r < B; ++r) {
                const double dy = lt.post_act.at(r, j) > 0.0 ? dx.at(r, j) : 0.0;
                dgamma += dy * lt.xhat.at(r, j);
                dbeta += dy;
                dxhat.at(r, j) = dy * s.gamma[j];
            }
            g.bn[li].gamma[j] = dgamma;
            g.bn[li].beta[j] = dbeta;
        }

        // Batch-norm backward including the batch-statistics terms.
        Matrix dz(B, n);
        for (std::size_t j = 0; j < n; ++j) {
            const double invstd = 1.0 / std::sqrt(lt.var[j] + bnh.eps);
            double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
            for (std::size_t r = 0; r < B; ++r) {
                sum_dxhat += dxhat.at(r, j);
                sum_dxhat_xhat += dxhat.at(r, j) * lt.xhat.at(r, j);
            }
            for (std::size_t r = 0; r < B; ++r) {
                dz.at(r, j) = invstd / double(B) *
                              (double(B) * dxhat.at(r, j) - sum_dxhat -
                               lt.xhat.at(r, j) * sum_dxhat_xhat);
            }
        }

        // Affine backward.
        auto& lg = g.layers[li];
        for (std::size_t r = 0; r < B; ++r) {
            for (std::size_t k = 0; k < lay.in; ++k) {
                const double xv = lt.input.at(r, k);
                for (std::size_t j = 0; j < n; ++j) lg.w[k * n + j] += xv * dz.at(r, j);
            }
            for (std::size_t j = 0; j < n; ++j) lg.b[j] += dz.at(r, j);
        }
        Matrix dprev(B, lay.in);
        for (std::size_t r = 0; r < B; ++r) {
            for (std::size_t k = 0; k < lay.in; ++k) {
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j) acc += dz.at(r, j) * lay.w[k * n + j];
                dprev.at(r, k) = acc;
            }
        }
        dx = std::move(dprev);
    }

    return g;
}

AdamState AdamState::zeros_like(const MlpParams& params) {
    AdamState s;
    s.m = MlpGrads::zeros_like(params);
    s.v = MlpGrads::zeros_like(params);
    s.step_count = 0;
    return s;
}

namespace {

void adam_update(std::vector<double>& p, const std::vector<double>& grad, std::vector<double>& m,
                 std::vector<double>& v, const AdamHyper& h, double bc1, double bc2,
                 const std::string& where) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double gi = grad[i];
        if (!std::isfinite(gi)) {
            throw std::runtime_error("adam_step: non-finite gradient in " + where);
        }
        m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * gi;
        v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * gi * gi;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= h.lr * mhat / (std::sqrt(vhat) + h.eps);
    }
}

}  // namespace

void adam_step(MlpParams& params, const MlpGrads& grads, AdamState& state, const AdamHyper& h) {
    ++state.step_count;
    const double bc1 = 1.0 - std::pow(h.beta1, double(state.step_count));
    const double bc2 = 1.0 - std::pow(h.beta2, double(state.step_count));
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const std::string where = "layer " + std::to_string(l);
        adam_update(params.layers[l].w, grads.layers[l].w, state.m.layers[l].w, state.v.layers[l].w,
                    h, bc1, bc2, where + " weights");
        adam_update(params.layers[l].b, grads.layers[l].b, state.m.layers[l].b, state.v.layers[l].b,
                    h, bc1, bc2, where + " bias");
    }
    for (std::size_t l = 0; l < params.bn.size(); ++l) {
        const std::string where = "batch-norm " + std::to_string(l);
        adam_update(params.bn[l].gamma, grads.bn[l].gamma, state.m.bn[l].gamma,
                    state.v.bn[l].gamma, h, bc1, bc2, where + " gamma");
        adam_update(params.bn[l].beta, grads.bn[l].beta, state.m.bn[l].beta, state.v.bn[l].beta, h,
                    bc1, bc2, where + " beta");
    }
}

}  // namespace maps
