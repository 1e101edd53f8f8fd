#pragma once

// Shared test plumbing: flat views over model parameters so whole-pipeline
// losses can be finite-difference checked slot by slot.

#include <cmath>
#include <cstddef>
#include <vector>

#include "vpq/encoder.hpp"
#include "vpq/net.hpp"

namespace testutil {

// Every scalar parameter of a net, weights first then biases, layer order.
inline std::vector<double*> net_slots(vpq::DenseNet& net) {
    std::vector<double*> slots;
    for (auto& w : net.weights)
        for (double& x : w) slots.push_back(&x);
    for (auto& b : net.biases)
        for (double& x : b) slots.push_back(&x);
    return slots;
}

// Gradient values in the same order as net_slots.
inline std::vector<double> grad_values(const vpq::GradientSet& g) {
    std::vector<double> vals;
    for (const auto& w : g.weights)
        for (double x : w) vals.push_back(x);
    for (const auto& b : g.biases)
        for (double x : b) vals.push_back(x);
    return vals;
}

inline std::vector<double*> table_slots(vpq::EmbeddingTable& table) {
    std::vector<double*> slots;
    for (double& x : table.data) slots.push_back(&x);
    return slots;
}

// Central difference of loss() under a perturbation of one slot.
template <class LossFn>
double fd_slot(double* slot, const LossFn& loss, double h) {
    const double keep = *slot;
    *slot = keep + h;
    const double up = loss();
    *slot = keep - h;
    const double dn = loss();
    *slot = keep;
    return (up - dn) / (2.0 * h);
}

// Max relative mismatch between analytic grads and finite differences over
// the given slots; near-zero pairs compare absolutely via the floor.
template <class LossFn>
double fd_max_rel(const std::vector<double*>& slots, const std::vector<double>& analytic,
                  const LossFn& loss, double h = 1e-5, double floor_ = 1e-6) {
    double worst = 0.0;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        const double fd = fd_slot(slots[i], loss, h);
        const double denom = std::max(floor_, std::fabs(fd) + std::fabs(analytic[i]));
        worst = std::max(worst, std::fabs(fd - analytic[i]) / denom);
    }
    return worst;
}

} // namespace testutil
