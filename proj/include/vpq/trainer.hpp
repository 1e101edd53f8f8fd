#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vpq/analysis.hpp"
#include "vpq/checkpoint.hpp"
#include "vpq/critic.hpp"
#include "vpq/data.hpp"
#include "vpq/ensemble.hpp"
#include "vpq/metrics.hpp"
#include "vpq/simenv.hpp"

namespace vpq {

struct ModelDims {
    int catalog = 0;
    int window_len = 10;
    int d_embed = 32;
    int d_state = 32;
    int q_hidden = 64;
    int ce_hidden = 64;
    int k_heads = 5;

    void validate() const;
    // Encoder head {d_embed, d_state, d_state}: the hidden layer is the
    // dense tanh stage of the encoder, the linear read-out gives unbounded
    // state features.
    std::vector<int> enc_dims() const { return {d_embed, d_state, d_state}; }
    std::vector<int> q_dims() const { return {d_state, q_hidden, catalog}; }
    std::vector<int> ce_dims() const { return {d_state, ce_hidden, catalog}; }
};

// Everything the learner owns. The embedding table and encoder head are
// shared: Q-heads and CE head both read the same state features.
struct Model {
    ModelDims dims;
    EmbeddingTable table;
    DenseNet enc_head;
    QEnsemble ens;
    DenseNet ce_head;

    // All parameters from one stream (streams::kInit of `seed`), drawn in
    // the fixed order: table, enc_head, Q-heads 0..K-1, ce_head. Targets
    // start synced.
    static Model init(const ModelDims& dims, std::uint64_t seed);

    Vec encode_state(const StateWindow& w) const { return encode(w, table, enc_head); }
};

// One Adam state per trainable component; the encoder sees a single step per
// train step even when both losses touch it (their gradients are summed
// before the update).
struct OptState {
    std::vector<AdamState> heads;
    AdamState enc_head;
    FlatAdamState table;
    AdamState ce_head;

    static OptState init(const Model& model);
};

struct TrainConfig {
    PenaltyConfig penalty;
    AblationMode ablation = AblationMode::q_critic;
    long steps = 20000;
    int batch = 64;
    int sync_period = 500; // hard target sync every C update steps
    AdamConfig adam;
    std::uint64_t seed = 0;
    int log_every = 100;

    void validate() const;
};

// One CSV row of the training log. Losses that a given ablation never
// computes are logged as 0.
struct StepLog {
    long step = 0;
    double td_loss = 0.0;
    double ce_loss = 0.0;
    double mean_sigma = 0.0; // batch mean sigma at the chosen max action
    double mean_w = 0.0;     // batch mean W at the chosen max action
};

std::string train_log_csv(const std::vector<StepLog>& log);

// One CE-only update: gradients flow into the CE head and the shared
// encoder (head net + embedding table); Q-heads and targets are untouched by
// construction. Exposed on its own so the no-gradient contract is testable
// as a plain statement about this function.
double ce_update(Model& model, OptState& opt,
                 std::span<const Transition* const> batch,
                 std::span<const double> q_weights, const AdamConfig& adam);

// The full training loop. Per step, in fixed order: draw batch indices
// (streams::kBatch), draw mixture weights (streams::kRem, drawn in every
// ablation so streams stay aligned across modes), build penalized targets,
// compute TD and CE gradients on the same parameter snapshot, then apply one
// Adam step per component (encoder gradients = TD part + CE part). Target
// sync every sync_period TD updates. Returns one StepLog per log_every steps
// plus the final step.
std::vector<StepLog> train(Model& model, OptState& opt, const TransitionStore& store,
                           const TrainConfig& cfg);

// Test-time recommendations: the CE head serves every ablation except
// q_only, which ranks by ensemble-mean Q.
RecommendationList serve(const Model& model, const StateWindow& w, int k,
                         AblationMode ablation);

// Greedy (k = 1) serving as a simulator policy.
ServingPolicy greedy_policy(const Model& model, AblationMode ablation);

// ----- checkpoint container ------------------------------------------------

void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path); // throws DataError

// ----- evaluation ----------------------------------------------------------

// Per-transition serving outcome kept for the rankings JSONL.
struct RankedCase {
    StateWindow window;
    std::int32_t truth_item = 0;
    EventType truth_event = EventType::skip;
    RecommendationList topk;
};

// Ranks every click/purchase transition of the store (skips never enter) at
// depth max(k_list) and scores HR/NDCG at each cutoff.
MetricsReport evaluate_model(const Model& model, const TransitionStore& store,
                             const std::vector<int>& k_list, AblationMode ablation,
                             std::vector<RankedCase>* cases = nullptr);

std::string rankings_jsonl(const std::vector<RankedCase>& cases);

} // namespace vpq
