#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vpq/ensemble.hpp"

namespace vpq {

// One ranked slot: a real item id (never the padding id) and the score that
// put it there.
struct Recommendation {
    std::int32_t item = 0;
    double score = 0.0;
};

// Ordered by (score desc, item asc); length = min(k, catalog).
using RecommendationList = std::vector<Recommendation>;

// Reweighted cross-entropy: -log softmax(logits)[action] * q_value, with
// q_value treated as a constant. Logit index action-1 serves item `action`.
double ce_loss_reweighted(std::span<const double> logits, std::int32_t action,
                          double q_value);

// Gradient of ce_loss_reweighted w.r.t. the logits:
// q_value * (softmax(logits) - onehot(action-1)). Scales linearly in q_value.
Vec ce_loss_logit_grad(std::span<const double> logits, std::int32_t action,
                       double q_value);

// Loss weight for one sample: max(0, equal-weight mean over the K online
// heads of Q_k(s, action)). Detached by construction -- the caller never
// backpropagates through this value.
double q_weight_for_ce(const QEnsemble& ens, std::span<const double> s,
                       std::int32_t action);

// Top-k items by logit; ties break toward the lower item id. Index i of the
// logit vector serves item i+1, so the padding id never appears.
RecommendationList recommend_topk(std::span<const double> logits, int k);

// Top-k by equal-weight ensemble-mean Q over the online heads; same ordering
// rule as recommend_topk.
RecommendationList recommend_greedy_q(const QEnsemble& ens, std::span<const double> s,
                                      int k);

// ----- batch CE loss -------------------------------------------------------

struct CeGrads {
    GradientSet ce_head;
    GradientSet enc_head;
    Vec table; // shaped like table.data
    double loss = 0.0;
};

// Mean over the batch of ce_loss_reweighted at each sample's action, with
// q_weights[i] the (already detached) weight for sample i.
double ce_loss_value(std::span<const Transition* const> batch,
                     std::span<const double> q_weights, const DenseNet& ce_head,
                     const EmbeddingTable& table, const DenseNet& enc_head);

// Same loss plus gradients. The CE head and the shared encoder (head net and
// embedding table) receive gradient; Q-heads never appear here, which is what
// keeps the no-gradient contract literal.
CeGrads ce_loss_grads(std::span<const Transition* const> batch,
                      std::span<const double> q_weights, const DenseNet& ce_head,
                      const EmbeddingTable& table, const DenseNet& enc_head);

// ----- ablation switch -----------------------------------------------------

// q_critic: full pipeline (CE reweighted by detached Q, both losses train).
// q_aux:    CE weight forced to 1; Q-heads still train as an auxiliary task.
// ce_only:  Q losses disabled entirely.
// q_only:   no CE head at eval; recommendations come from recommend_greedy_q.
enum class AblationMode { q_critic, q_aux, ce_only, q_only };

const char* ablation_mode_name(AblationMode m);
AblationMode ablation_mode_from_name(const std::string& name); // throws ConfigError

} // namespace vpq
