#include "vpq/critic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vpq {

namespace {

std::size_t checked_action_index(std::int32_t action, std::size_t n_logits) {
    if (action == kPaddingId) throw ContractError("CE loss: action is the padding id");
    if (action < 1 || static_cast<std::size_t>(action) > n_logits) {
        throw ContractError("CE loss: action outside the catalog");
    }
    return static_cast<std::size_t>(action - 1);
}

// softmax with max-subtraction; also reports log(sum exp(shifted)).
Vec stable_softmax(std::span<const double> logits, double& log_z, double& max_logit) {
    max_logit = *std::max_element(logits.begin(), logits.end());
    Vec p(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - max_logit);
        z += p[i];
    }
    for (double& v : p) v /= z;
    log_z = std::log(z);
    return p;
}

} // namespace

double ce_loss_reweighted(std::span<const double> logits, std::int32_t action,
                          double q_value) {
    const std::size_t idx = checked_action_index(action, logits.size());
    if (q_value == 0.0) return 0.0;
    double log_z = 0.0, max_logit = 0.0;
    (void)stable_softmax(logits, log_z, max_logit);
    const double log_p = logits[idx] - max_logit - log_z;
    return -log_p * q_value;
}

Vec ce_loss_logit_grad(std::span<const double> logits, std::int32_t action,
                       double q_value) {
    const std::size_t idx = checked_action_index(action, logits.size());
    if (q_value == 0.0) return Vec(logits.size(), 0.0);
    double log_z = 0.0, max_logit = 0.0;
    Vec g = stable_softmax(logits, log_z, max_logit);
    g[idx] -= 1.0;
    for (double& v : g) v *= q_value;
    return g;
}

double q_weight_for_ce(const QEnsemble& ens, std::span<const double> s,
                       std::int32_t action) {
    const std::size_t idx =
        checked_action_index(action, static_cast<std::size_t>(ens.actions()));
    double mean = 0.0;
    for (const DenseNet& head : ens.online) mean += forward(head, s)[idx];
    mean /= ens.heads();
    return std::max(0.0, mean);
}

namespace {

RecommendationList topk_by_score(std::span<const double> scores, int k) {
    if (k < 1) throw ContractError("recommend: k must be >= 1");
    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take),
                      order.end(), [&](int a, int b) {
                          if (scores[static_cast<std::size_t>(a)] !=
                              scores[static_cast<std::size_t>(b)]) {
                              return scores[static_cast<std::size_t>(a)] >
                                     scores[static_cast<std::size_t>(b)];
                          }
                          return a < b;
                      });
    RecommendationList out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        out.push_back({order[i] + 1, scores[static_cast<std::size_t>(order[i])]});
    }
    return out;
}

} // namespace

RecommendationList recommend_topk(std::span<const double> logits, int k) {
    return topk_by_score(logits, k);
}

RecommendationList recommend_greedy_q(const QEnsemble& ens, std::span<const double> s,
                                      int k) {
    Vec mean(static_cast<std::size_t>(ens.actions()), 0.0);
    for (const DenseNet& head : ens.online) {
        const Vec q = forward(head, s);
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += q[i];
    }
    for (double& v : mean) v /= ens.heads();
    return topk_by_score(mean, k);
}

double ce_loss_value(std::span<const Transition* const> batch,
                     std::span<const double> q_weights, const DenseNet& ce_head,
                     const EmbeddingTable& table, const DenseNet& enc_head) {
    if (batch.size() != q_weights.size()) {
        throw ContractError("ce_loss_value: batch/weight size mismatch");
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Vec features = encode(batch[i]->state, table, enc_head);
        const Vec logits = forward(ce_head, features);
        loss += ce_loss_reweighted(logits, batch[i]->action, q_weights[i]);
    }
    return loss / static_cast<double>(batch.size());
}

CeGrads ce_loss_grads(std::span<const Transition* const> batch,
                      std::span<const double> q_weights, const DenseNet& ce_head,
                      const EmbeddingTable& table, const DenseNet& enc_head) {
    if (batch.size() != q_weights.size()) {
        throw ContractError("ce_loss_grads: batch/weight size mismatch");
    }
    CeGrads grads;
    grads.ce_head = GradientSet::zeros_like(ce_head);
    grads.enc_head = GradientSet::zeros_like(enc_head);
    grads.table.assign(table.data.size(), 0.0);

    const double inv_b = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Transition& t = *batch[i];
        const Vec features = encode(t.state, table, enc_head);
        const Vec logits = forward(ce_head, features);
        loss += ce_loss_reweighted(logits, t.action, q_weights[i]);

        Vec logit_grad = ce_loss_logit_grad(logits, t.action, q_weights[i]);
        for (double& v : logit_grad) v *= inv_b;
        Vec feature_grad;
        backward_accumulate(ce_head, features, logit_grad, grads.ce_head, &feature_grad);
        encode_backward(t.state, table, enc_head, feature_grad, grads.table, grads.enc_head);
    }
    grads.loss = loss * inv_b;
    if (!std::isfinite(grads.loss)) throw DivergenceError("CE loss is non-finite");
    return grads;
}

const char* ablation_mode_name(AblationMode m) {
    switch (m) {
    case AblationMode::q_critic: return "q_critic";
    case AblationMode::q_aux: return "q_aux";
    case AblationMode::ce_only: return "ce_only";
    case AblationMode::q_only: return "q_only";
    }
    return "?";
}

AblationMode ablation_mode_from_name(const std::string& name) {
    if (name == "q_critic") return AblationMode::q_critic;
    if (name == "q_aux") return AblationMode::q_aux;
    if (name == "ce_only") return AblationMode::ce_only;
    if (name == "q_only") return AblationMode::q_only;
    throw ConfigError("unknown ablation mode: '" + name + "'");
}

} // namespace vpq
