#include "vpq/net.hpp"

#include <cmath>
#include <cstring>

namespace vpq {

static void check_dims(const std::vector<int>& dims) {
    if (dims.size() < 2) throw ContractError("DenseNet needs at least 2 layer dims");
    for (int d : dims) {
        if (d <= 0) throw ContractError("DenseNet layer dims must be positive");
    }
}

DenseNet DenseNet::zeros(std::vector<int> dims) {
    check_dims(dims);
    DenseNet net;
    net.layer_dims = std::move(dims);
    for (std::size_t l = 0; l + 1 < net.layer_dims.size(); ++l) {
        const auto rows = static_cast<std::size_t>(net.layer_dims[l + 1]);
        const auto cols = static_cast<std::size_t>(net.layer_dims[l]);
        net.weights.emplace_back(rows * cols, 0.0);
        net.biases.emplace_back(rows, 0.0);
    }
    return net;
}

DenseNet DenseNet::init(std::vector<int> dims, Rng& rng) {
    DenseNet net = zeros(std::move(dims));
    for (int l = 0; l < net.layer_count(); ++l) {
        const int fan_in = net.layer_dims[l];
        const int fan_out = net.layer_dims[l + 1];
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (double& w : net.weights[l]) w = (2.0 * rng.uniform() - 1.0) * bound;
    }
    return net;
}

std::size_t DenseNet::param_count() const {
    std::size_t n = 0;
    for (const auto& w : weights) n += w.size();
    for (const auto& b : biases) n += b.size();
    return n;
}

bool DenseNet::same_shape(const DenseNet& other) const {
    return layer_dims == other.layer_dims;
}

GradientSet GradientSet::zeros_like(const DenseNet& net) {
    GradientSet g;
    for (const auto& w : net.weights) g.weights.emplace_back(w.size(), 0.0);
    for (const auto& b : net.biases) g.biases.emplace_back(b.size(), 0.0);
    return g;
}

void GradientSet::add(const GradientSet& other) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (std::size_t i = 0; i < weights[l].size(); ++i) weights[l][i] += other.weights[l][i];
        for (std::size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += other.biases[l][i];
    }
}

void GradientSet::scale(double factor) {
    for (auto& w : weights)
        for (double& x : w) x *= factor;
    for (auto& b : biases)
        for (double& x : b) x *= factor;
}

bool GradientSet::finite() const {
    for (const auto& w : weights)
        if (!all_finite(w)) return false;
    for (const auto& b : biases)
        if (!all_finite(b)) return false;
    return true;
}

// Runs the affine + activation stack, recording post-activation values per
// layer into `acts` when provided (acts[0] is the input).
static Vec run_forward(const DenseNet& net, std::span<const double> input,
                       std::vector<Vec>* acts) {
    if (static_cast<int>(input.size()) != net.input_dim()) {
        throw ContractError("forward: input length does not match layer_dims[0]");
    }
    Vec cur(input.begin(), input.end());
    if (acts) acts->push_back(cur);
    const int layers = net.layer_count();
    for (int l = 0; l < layers; ++l) {
        const int in_dim = net.layer_dims[l];
        const int out_dim = net.layer_dims[l + 1];
        Vec next(static_cast<std::size_t>(out_dim));
        const double* w = net.weights[l].data();
        for (int r = 0; r < out_dim; ++r) {
            double acc = net.biases[l][r];
            const double* wr = w + static_cast<std::size_t>(r) * in_dim;
            for (int c = 0; c < in_dim; ++c) acc += wr[c] * cur[c];
            next[r] = (l + 1 < layers) ? std::tanh(acc) : acc;
        }
        cur = std::move(next);
        if (acts) acts->push_back(cur);
    }
    return cur;
}

Vec forward(const DenseNet& net, std::span<const double> input) {
    return run_forward(net, input, nullptr);
}

void backward_accumulate(const DenseNet& net, std::span<const double> input,
                         std::span<const double> output_grad, GradientSet& into,
                         Vec* input_grad) {
    if (static_cast<int>(output_grad.size()) != net.output_dim()) {
        throw ContractError("backward: output_grad length does not match layer_dims[last]");
    }
    std::vector<Vec> acts;
    acts.reserve(net.layer_dims.size());
    run_forward(net, input, &acts);

    Vec delta(output_grad.begin(), output_grad.end());
    for (int l = net.layer_count() - 1; l >= 0; --l) {
        const int in_dim = net.layer_dims[l];
        const int out_dim = net.layer_dims[l + 1];
        // delta currently holds dL/d(post-activation of layer l); fold the
        // tanh derivative for hidden layers (output layer is linear).
        if (l < net.layer_count() - 1) {
            for (int r = 0; r < out_dim; ++r) {
                const double a = acts[l + 1][r];
                delta[r] *= 1.0 - a * a;
            }
        }
        const Vec& below = acts[l];
        double* gw = into.weights[l].data();
        for (int r = 0; r < out_dim; ++r) {
            const double d = delta[r];
            into.biases[l][r] += d;
            double* gwr = gw + static_cast<std::size_t>(r) * in_dim;
            for (int c = 0; c < in_dim; ++c) gwr[c] += d * below[c];
        }
        if (l > 0 || input_grad) {
            Vec prev(static_cast<std::size_t>(in_dim), 0.0);
            const double* w = net.weights[l].data();
            for (int r = 0; r < out_dim; ++r) {
                const double d = delta[r];
                const double* wr = w + static_cast<std::size_t>(r) * in_dim;
                for (int c = 0; c < in_dim; ++c) prev[c] += d * wr[c];
            }
            delta = std::move(prev);
        }
    }
    if (input_grad) *input_grad = std::move(delta);
}

GradientSet backward(const DenseNet& net, std::span<const double> input,
                     std::span<const double> output_grad, Vec* input_grad) {
    GradientSet g = GradientSet::zeros_like(net);
    backward_accumulate(net, input, output_grad, g, input_grad);
    return g;
}

static void adam_apply(Vec& params, const Vec& grads, Vec& m, Vec& v, long t,
                       const AdamConfig& cfg) {
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

AdamState AdamState::zeros_like(const DenseNet& net) {
    AdamState s;
    for (const auto& w : net.weights) {
        s.m_weights.emplace_back(w.size(), 0.0);
        s.v_weights.emplace_back(w.size(), 0.0);
    }
    for (const auto& b : net.biases) {
        s.m_biases.emplace_back(b.size(), 0.0);
        s.v_biases.emplace_back(b.size(), 0.0);
    }
    return s;
}

void adam_step(DenseNet& net, const GradientSet& grads, AdamState& state,
               const AdamConfig& cfg) {
    if (!grads.finite()) throw DivergenceError("adam_step: non-finite gradient entry");
    state.step += 1;
    for (int l = 0; l < net.layer_count(); ++l) {
        adam_apply(net.weights[l], grads.weights[l], state.m_weights[l], state.v_weights[l],
                   state.step, cfg);
        adam_apply(net.biases[l], grads.biases[l], state.m_biases[l], state.v_biases[l],
                   state.step, cfg);
    }
}

void adam_step_flat(Vec& params, const Vec& grads, FlatAdamState& state,
                    const AdamConfig& cfg) {
    if (!all_finite(grads)) throw DivergenceError("adam_step_flat: non-finite gradient entry");
    state.step += 1;
    adam_apply(params, grads, state.m, state.v, state.step, cfg);
}

GradientSet fd_gradient(const DenseNet& net, std::span<const double> input,
                        const LossOfOutput& loss, double h) {
    DenseNet work = net;
    GradientSet g = GradientSet::zeros_like(net);
    auto eval = [&]() { return loss(forward(work, input)); };
    auto probe = [&](double& param, double& slot) {
        const double saved = param;
        param = saved + h;
        const double up = eval();
        param = saved - h;
        const double down = eval();
        param = saved;
        slot = (up - down) / (2.0 * h);
    };
    for (int l = 0; l < net.layer_count(); ++l) {
        for (std::size_t i = 0; i < work.weights[l].size(); ++i) {
            probe(work.weights[l][i], g.weights[l][i]);
        }
        for (std::size_t i = 0; i < work.biases[l].size(); ++i) {
            probe(work.biases[l][i], g.biases[l][i]);
        }
    }
    return g;
}

double max_rel_error(const GradientSet& a, const GradientSet& b, double floor_) {
    double worst = 0.0;
    auto scan = [&](const Vec& x, const Vec& y) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double denom = std::max({std::fabs(x[i]), std::fabs(y[i]), floor_});
            worst = std::max(worst, std::fabs(x[i] - y[i]) / denom);
        }
    };
    for (std::size_t l = 0; l < a.weights.size(); ++l) {
        scan(a.weights[l], b.weights[l]);
        scan(a.biases[l], b.biases[l]);
    }
    return worst;
}

FiniteDiffReport finite_diff_check(const DenseNet& net, std::span<const double> input,
                                   const LossOfOutput& loss, double tol) {
    if (tol <= 0.0) throw ContractError("finite_diff_check: tol must be positive");
    // Analytic side: dL/d(output) by central differences over the (small)
    // output vector, then one backward pass.
    const Vec out = forward(net, input);
    Vec out_grad(out.size(), 0.0);
    const double h = 1e-6;
    Vec probe = out;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double saved = probe[i];
        probe[i] = saved + h;
        const double up = loss(probe);
        probe[i] = saved - h;
        const double down = loss(probe);
        probe[i] = saved;
        out_grad[i] = (up - down) / (2.0 * h);
    }
    const GradientSet analytic = backward(net, input, out_grad);
    const GradientSet numeric = fd_gradient(net, input, loss);
    FiniteDiffReport report;
    report.max_rel_error = max_rel_error(analytic, numeric);
    report.pass = report.max_rel_error < tol;
    return report;
}

} // namespace vpq
