#pragma once

#include <span>
#include <string>
#include <vector>

#include "vpq/data.hpp"
#include "vpq/encoder.hpp"
#include "vpq/net.hpp"

namespace vpq {

// K online Q-heads plus frozen target copies of identical shape. Each head
// maps d_state features to one Q-value per catalog item (action a lives at
// output index a-1). Targets change only through target_sync.
struct QEnsemble {
    std::vector<DenseNet> online;
    std::vector<DenseNet> target;
    long steps_since_sync = 0;

    static QEnsemble init(int k, std::vector<int> head_dims, Rng& rng);

    int heads() const { return static_cast<int>(online.size()); }
    int actions() const { return online.front().output_dim(); }
};

// Hard copy online -> target for every head; resets the sync counter.
void target_sync(QEnsemble& ens);

struct MixtureWeights {
    Vec alpha;
};

// K uniform(0,1] variates normalized to the simplex; one draw per minibatch.
MixtureWeights sample_mixture(int k, Rng& rng);

enum class PenaltyMode { none, p_sub, p_mul };

const char* penalty_mode_name(PenaltyMode m);
PenaltyMode penalty_mode_from_name(const std::string& name); // throws ConfigError

struct PenaltyConfig {
    PenaltyMode mode = PenaltyMode::p_mul;
    double lambda = 20.0; // penalty scale, >= 0
    double gamma = 0.9;   // discount, in [0, 1)

    void validate() const;
};

// Per-sample targets plus diagnostics taken at the chosen max action.
struct TargetBatch {
    Vec y;
    Vec sigma_at_max;
    Vec w_at_max;
};

// Evaluates every target head on s_next; row k is head k over all actions.
Mat target_q_matrix(const QEnsemble& ens, std::span<const double> s_next);

// Convex combination of the rows under the mixture weights.
Vec mixture_mean(const Mat& qmat, const MixtureWeights& alpha);

// Per-action sample standard deviation across heads (K-1 divisor); K >= 2.
Vec uncertainty(const Mat& qmat);

// W = 1/(1 + lambda*sigma); equals 1 exactly when lambda*sigma == 0.
double penalty_weight(double sigma, double lambda);

// Max over actions of the penalized mixture value:
//   none:  mu
//   p_sub: mu - lambda*sigma
//   p_mul: mu * W
// Ties resolve to the lowest action index. sigma/w report the chosen action
// regardless of mode (w is the weight that lambda would apply there).
struct PenalizedMax {
    double value = 0.0;
    int argmax = 0; // 0-based action index
    double sigma = 0.0;
    double w = 1.0;
};

PenalizedMax penalized_bootstrap(const Mat& qmat, const MixtureWeights& alpha,
                                 const PenaltyConfig& cfg);

// Full-batch target construction: y = r for terminal transitions, otherwise
// r + gamma * penalized max over the catalog.
TargetBatch penalized_target(std::span<const Transition* const> batch,
                             const QEnsemble& ens, const EmbeddingTable& table,
                             const DenseNet& enc_head, const PenaltyConfig& cfg,
                             const MixtureWeights& alpha);

// ----- TD loss -------------------------------------------------------------

// Mean over the batch of 0.5*(y - sum_k alpha_k Q_k(s,a))^2 with y constant.
double td_loss_value(std::span<const Transition* const> batch, const TargetBatch& targets,
                     const MixtureWeights& alpha, const QEnsemble& ens,
                     const EmbeddingTable& table, const DenseNet& enc_head);

struct TdGrads {
    std::vector<GradientSet> heads; // one per online head
    GradientSet enc_head;
    Vec table; // shaped like table.data
    double loss = 0.0;
};

TdGrads td_loss_grads(std::span<const Transition* const> batch, const TargetBatch& targets,
                      const MixtureWeights& alpha, const QEnsemble& ens,
                      const EmbeddingTable& table, const DenseNet& enc_head);

} // namespace vpq
