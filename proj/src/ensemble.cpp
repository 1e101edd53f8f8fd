#include "vpq/ensemble.hpp"

#include <algorithm>
#include <cmath>

namespace vpq {

QEnsemble QEnsemble::init(int k, std::vector<int> head_dims, Rng& rng) {
    if (k < 1) throw ContractError("QEnsemble: K must be >= 1");
    QEnsemble ens;
    ens.online.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) ens.online.push_back(DenseNet::init(head_dims, rng));
    ens.target = ens.online; // synced at creation
    return ens;
}

void target_sync(QEnsemble& ens) {
    ens.target = ens.online;
    ens.steps_since_sync = 0;
}

MixtureWeights sample_mixture(int k, Rng& rng) {
    if (k < 1) throw ContractError("sample_mixture: K must be >= 1");
    MixtureWeights w;
    w.alpha.resize(static_cast<std::size_t>(k));
    double sum = 0.0;
    for (double& a : w.alpha) {
        a = rng.uniform_open0();
        sum += a;
    }
    for (double& a : w.alpha) a /= sum;
    return w;
}

const char* penalty_mode_name(PenaltyMode m) {
    switch (m) {
    case PenaltyMode::none: return "none";
    case PenaltyMode::p_sub: return "p_sub";
    case PenaltyMode::p_mul: return "p_mul";
    }
    return "?";
}

PenaltyMode penalty_mode_from_name(const std::string& name) {
    if (name == "none") return PenaltyMode::none;
    if (name == "p_sub") return PenaltyMode::p_sub;
    if (name == "p_mul") return PenaltyMode::p_mul;
    throw ConfigError("unknown penalty mode: '" + name + "'");
}

void PenaltyConfig::validate() const {
    if (lambda < 0.0) throw ConfigError("penalty lambda must be >= 0");
    if (gamma < 0.0 || gamma >= 1.0) throw ConfigError("gamma must be in [0, 1)");
}

Mat target_q_matrix(const QEnsemble& ens, std::span<const double> s_next) {
    if (!all_finite(s_next)) throw ContractError("target_q_matrix: non-finite features");
    Mat q(ens.heads(), ens.actions());
    for (int k = 0; k < ens.heads(); ++k) {
        const Vec row = forward(ens.target[static_cast<std::size_t>(k)], s_next);
        std::copy(row.begin(), row.end(), q.row(k).begin());
    }
    return q;
}

Vec mixture_mean(const Mat& qmat, const MixtureWeights& alpha) {
    if (static_cast<int>(alpha.alpha.size()) != qmat.rows) {
        throw ContractError("mixture_mean: weight count does not match rows");
    }
    Vec mu(static_cast<std::size_t>(qmat.cols), 0.0);
    for (int k = 0; k < qmat.rows; ++k) {
        const double a = alpha.alpha[static_cast<std::size_t>(k)];
        auto row = qmat.row(k);
        for (int j = 0; j < qmat.cols; ++j) mu[static_cast<std::size_t>(j)] += a * row[j];
    }
    return mu;
}

Vec uncertainty(const Mat& qmat) {
    if (qmat.rows < 2) throw ConfigError("uncertainty: needs K >= 2 heads");
    Vec sd(static_cast<std::size_t>(qmat.cols), 0.0);
    for (int j = 0; j < qmat.cols; ++j) {
        double mean = 0.0;
        for (int k = 0; k < qmat.rows; ++k) mean += qmat.at(k, j);
        mean /= qmat.rows;
        double ss = 0.0;
        for (int k = 0; k < qmat.rows; ++k) {
            const double d = qmat.at(k, j) - mean;
            ss += d * d;
        }
        sd[static_cast<std::size_t>(j)] = std::sqrt(ss / (qmat.rows - 1));
    }
    return sd;
}

double penalty_weight(double sigma, double lambda) {
    if (sigma < 0.0 || lambda < 0.0) throw ContractError("penalty_weight: negative input");
    return 1.0 / (1.0 + lambda * sigma);
}

PenalizedMax penalized_bootstrap(const Mat& qmat, const MixtureWeights& alpha,
                                 const PenaltyConfig& cfg) {
    cfg.validate();
    if ((cfg.mode == PenaltyMode::p_sub || cfg.mode == PenaltyMode::p_mul) && qmat.rows < 2) {
        throw ConfigError("uncertainty-based penalty needs K >= 2 heads");
    }
    const Vec mu = mixture_mean(qmat, alpha);
    const Vec sigma = qmat.rows >= 2 ? uncertainty(qmat)
                                     : Vec(static_cast<std::size_t>(qmat.cols), 0.0);
    PenalizedMax best;
    bool first = true;
    for (int a = 0; a < qmat.cols; ++a) {
        const auto ai = static_cast<std::size_t>(a);
        double v = mu[ai];
        switch (cfg.mode) {
        case PenaltyMode::none: break;
        case PenaltyMode::p_sub: v = mu[ai] - cfg.lambda * sigma[ai]; break;
        case PenaltyMode::p_mul: v = mu[ai] * penalty_weight(sigma[ai], cfg.lambda); break;
        }
        if (first || v > best.value) {
            first = false;
            best.value = v;
            best.argmax = a;
            best.sigma = sigma[ai];
            best.w = penalty_weight(sigma[ai], cfg.lambda);
        }
    }
    return best;
}

TargetBatch penalized_target(std::span<const Transition* const> batch,
                             const QEnsemble& ens, const EmbeddingTable& table,
                             const DenseNet& enc_head, const PenaltyConfig& cfg,
                             const MixtureWeights& alpha) {
    cfg.validate();
    if (batch.empty()) throw ContractError("penalized_target: empty batch");
    TargetBatch out;
    out.y.reserve(batch.size());
    out.sigma_at_max.reserve(batch.size());
    out.w_at_max.reserve(batch.size());
    for (const Transition* t : batch) {
        if (t->terminal) {
            out.y.push_back(t->reward);
            out.sigma_at_max.push_back(0.0);
            out.w_at_max.push_back(1.0);
            continue;
        }
        const Vec features = encode(t->next_state, table, enc_head);
        const Mat qmat = target_q_matrix(ens, features);
        const PenalizedMax pm = penalized_bootstrap(qmat, alpha, cfg);
        const double y = t->reward + cfg.gamma * pm.value;
        if (!std::isfinite(y)) throw DivergenceError("penalized_target: non-finite target");
        out.y.push_back(y);
        out.sigma_at_max.push_back(pm.sigma);
        out.w_at_max.push_back(pm.w);
    }
    return out;
}

// ----- TD loss -------------------------------------------------------------

static double mixture_prediction(const Transition& t, const MixtureWeights& alpha,
                                 const QEnsemble& ens, const Vec& features) {
    double pred = 0.0;
    const auto action_idx = static_cast<std::size_t>(t.action - 1);
    for (int k = 0; k < ens.heads(); ++k) {
        const Vec q = forward(ens.online[static_cast<std::size_t>(k)], features);
        pred += alpha.alpha[static_cast<std::size_t>(k)] * q[action_idx];
    }
    return pred;
}

double td_loss_value(std::span<const Transition* const> batch, const TargetBatch& targets,
                     const MixtureWeights& alpha, const QEnsemble& ens,
                     const EmbeddingTable& table, const DenseNet& enc_head) {
    if (batch.size() != targets.y.size()) {
        throw ContractError("td_loss_value: batch/target size mismatch");
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Vec features = encode(batch[i]->state, table, enc_head);
        const double pred = mixture_prediction(*batch[i], alpha, ens, features);
        const double err = targets.y[i] - pred;
        loss += 0.5 * err * err;
    }
    return loss / static_cast<double>(batch.size());
}

TdGrads td_loss_grads(std::span<const Transition* const> batch, const TargetBatch& targets,
                      const MixtureWeights& alpha, const QEnsemble& ens,
                      const EmbeddingTable& table, const DenseNet& enc_head) {
    if (batch.size() != targets.y.size()) {
        throw ContractError("td_loss_grads: batch/target size mismatch");
    }
    TdGrads grads;
    grads.heads.reserve(static_cast<std::size_t>(ens.heads()));
    for (int k = 0; k < ens.heads(); ++k) {
        grads.heads.push_back(GradientSet::zeros_like(ens.online[static_cast<std::size_t>(k)]));
    }
    grads.enc_head = GradientSet::zeros_like(enc_head);
    grads.table.assign(table.data.size(), 0.0);

    const double inv_b = 1.0 / static_cast<double>(batch.size());
    const int n_actions = ens.actions();
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Transition& t = *batch[i];
        const Vec features = encode(t.state, table, enc_head);
        const auto action_idx = static_cast<std::size_t>(t.action - 1);

        double pred = 0.0;
        std::vector<Vec> head_out(static_cast<std::size_t>(ens.heads()));
        for (int k = 0; k < ens.heads(); ++k) {
            head_out[static_cast<std::size_t>(k)] =
                forward(ens.online[static_cast<std::size_t>(k)], features);
            pred += alpha.alpha[static_cast<std::size_t>(k)] * head_out[static_cast<std::size_t>(k)][action_idx];
        }
        const double err = targets.y[i] - pred;
        loss += 0.5 * err * err;

        // dL/dpred = -err / B; fan out through each head at the taken action.
        const double dpred = -err * inv_b;
        Vec feature_grad(features.size(), 0.0);
        Vec out_grad(static_cast<std::size_t>(n_actions), 0.0);
        for (int k = 0; k < ens.heads(); ++k) {
            out_grad[action_idx] = dpred * alpha.alpha[static_cast<std::size_t>(k)];
            Vec in_grad;
            backward_accumulate(ens.online[static_cast<std::size_t>(k)], features, out_grad,
                                grads.heads[static_cast<std::size_t>(k)], &in_grad);
            for (std::size_t j = 0; j < feature_grad.size(); ++j) feature_grad[j] += in_grad[j];
            out_grad[action_idx] = 0.0;
        }
        encode_backward(t.state, table, enc_head, feature_grad, grads.table, grads.enc_head);
    }
    grads.loss = loss * inv_b;
    if (!std::isfinite(grads.loss)) throw DivergenceError("td loss is non-finite");
    return grads;
}

} // namespace vpq
