#pragma once

#include <functional>
#include <span>
#include <vector>

#include "vpq/rng.hpp"
#include "vpq/util.hpp"

namespace vpq {

// Fully connected net with tanh hidden layers and a linear output layer.
// weights[l] is (layer_dims[l+1] x layer_dims[l]) row-major, biases[l] has
// layer_dims[l+1] entries. All arithmetic is double precision.
struct DenseNet {
    std::vector<int> layer_dims;
    std::vector<Vec> weights;
    std::vector<Vec> biases;

    static DenseNet zeros(std::vector<int> dims);
    // Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases.
    // Draw order: layer by layer, weights row-major, biases consume no draws.
    static DenseNet init(std::vector<int> dims, Rng& rng);

    int input_dim() const { return layer_dims.front(); }
    int output_dim() const { return layer_dims.back(); }
    int layer_count() const { return static_cast<int>(weights.size()); }
    std::size_t param_count() const;
    bool same_shape(const DenseNet& other) const;
};

struct GradientSet {
    std::vector<Vec> weights;
    std::vector<Vec> biases;

    static GradientSet zeros_like(const DenseNet& net);
    void add(const GradientSet& other);
    void scale(double factor);
    bool finite() const;
};

Vec forward(const DenseNet& net, std::span<const double> input);

// Gradients of dot(output, output_grad) with respect to every parameter.
// When input_grad is non-null it receives the gradient w.r.t. the input,
// for chaining into upstream parameters.
GradientSet backward(const DenseNet& net, std::span<const double> input,
                     std::span<const double> output_grad, Vec* input_grad = nullptr);

// Accumulating variant used by batch loops: adds into `into` instead of
// allocating a fresh GradientSet per sample.
void backward_accumulate(const DenseNet& net, std::span<const double> input,
                         std::span<const double> output_grad, GradientSet& into,
                         Vec* input_grad = nullptr);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// First/second moments shaped like the owning net; one step counter that
// advances exactly once per update.
struct AdamState {
    std::vector<Vec> m_weights, v_weights;
    std::vector<Vec> m_biases, v_biases;
    long step = 0;

    static AdamState zeros_like(const DenseNet& net);
};

void adam_step(DenseNet& net, const GradientSet& grads, AdamState& state,
               const AdamConfig& cfg);

// Flat-array Adam for parameters that are not DenseNets (embedding tables).
struct FlatAdamState {
    Vec m, v;
    long step = 0;

    static FlatAdamState zeros(std::size_t n) { return {Vec(n, 0.0), Vec(n, 0.0), 0}; }
};

void adam_step_flat(Vec& params, const Vec& grads, FlatAdamState& state,
                    const AdamConfig& cfg);

// ----- gradient verification ---------------------------------------------

using LossOfOutput = std::function<double(std::span<const double>)>;

// Central finite differences of loss(forward(net, input)) over every
// parameter, step h.
GradientSet fd_gradient(const DenseNet& net, std::span<const double> input,
                        const LossOfOutput& loss, double h = 1e-5);

// Max relative error between two gradient sets; the denominator floors at
// `floor_` so near-zero entries compare absolutely.
double max_rel_error(const GradientSet& a, const GradientSet& b, double floor_ = 1e-6);

struct FiniteDiffReport {
    double max_rel_error = 0.0;
    bool pass = false;
};

FiniteDiffReport finite_diff_check(const DenseNet& net, std::span<const double> input,
                                   const LossOfOutput& loss, double tol);

} // namespace vpq
