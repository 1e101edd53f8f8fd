#include "vpq/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace vpq {

void ModelDims::validate() const {
    if (catalog < 1) throw ConfigError("model: catalog must be >= 1");
    if (window_len < 1) throw ConfigError("model: window_len must be >= 1");
    if (d_embed < 1 || d_state < 1) throw ConfigError("model: embed/state dims must be >= 1");
    if (q_hidden < 1 || ce_hidden < 1) throw ConfigError("model: hidden dims must be >= 1");
    if (k_heads < 1) throw ConfigError("model: k_heads must be >= 1");
}

Model Model::init(const ModelDims& dims, std::uint64_t seed) {
    dims.validate();
    Rng rng = derived_rng(seed, streams::kInit);
    Model m;
    m.dims = dims;
    m.table = EmbeddingTable::init(dims.catalog, dims.d_embed, rng);
    m.enc_head = DenseNet::init(dims.enc_dims(), rng);
    m.ens = QEnsemble::init(dims.k_heads, dims.q_dims(), rng);
    m.ce_head = DenseNet::init(dims.ce_dims(), rng);
    return m;
}

OptState OptState::init(const Model& model) {
    OptState opt;
    for (const DenseNet& head : model.ens.online) {
        opt.heads.push_back(AdamState::zeros_like(head));
    }
    opt.enc_head = AdamState::zeros_like(model.enc_head);
    opt.table = FlatAdamState::zeros(model.table.data.size());
    opt.ce_head = AdamState::zeros_like(model.ce_head);
    return opt;
}

void TrainConfig::validate() const {
    penalty.validate();
    if (steps < 0) throw ConfigError("train: steps must be >= 0");
    if (batch < 1) throw ConfigError("train: batch must be >= 1");
    if (sync_period < 1) throw ConfigError("train: sync_period must be >= 1");
    if (log_every < 1) throw ConfigError("train: log_every must be >= 1");
}

std::string train_log_csv(const std::vector<StepLog>& log) {
    std::ostringstream out;
    out << "step,td_loss,ce_loss,mean_sigma,mean_w\n";
    for (const StepLog& row : log) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%ld,%.12g,%.12g,%.12g,%.12g\n", row.step,
                      row.td_loss, row.ce_loss, row.mean_sigma, row.mean_w);
        out << buf;
    }
    return out.str();
}

double ce_update(Model& model, OptState& opt,
                 std::span<const Transition* const> batch,
                 std::span<const double> q_weights, const AdamConfig& adam) {
    CeGrads grads = ce_loss_grads(batch, q_weights, model.ce_head, model.table,
                                  model.enc_head);
    adam_step(model.ce_head, grads.ce_head, opt.ce_head, adam);
    adam_step(model.enc_head, grads.enc_head, opt.enc_head, adam);
    // The padding row keeps zero gradient and zero Adam moments, so it stays
    // pinned at zero through any number of updates.
    adam_step_flat(model.table.data, grads.table, opt.table, adam);
    return grads.loss;
}

namespace {

std::vector<const Transition*> gather(const TransitionStore& store,
                                      const std::vector<std::size_t>& idx) {
    std::vector<const Transition*> batch;
    batch.reserve(idx.size());
    for (std::size_t i : idx) batch.push_back(&store.at(i));
    return batch;
}

} // namespace

std::vector<StepLog> train(Model& model, OptState& opt, const TransitionStore& store,
                           const TrainConfig& cfg) {
    cfg.validate();
    if (store.size() == 0) throw ConfigError("train: empty transition store");
    if (store.catalog() != model.dims.catalog) {
        throw ConfigError("train: store catalog does not match the model");
    }
    if (store.window_len() != model.dims.window_len) {
        throw ConfigError("train: store window length does not match the model");
    }
    const bool td_on = cfg.ablation != AblationMode::ce_only;
    const bool ce_on = cfg.ablation != AblationMode::q_only;
    if (td_on && cfg.penalty.mode != PenaltyMode::none && model.dims.k_heads < 2) {
        throw ConfigError("train: uncertainty penalties need k_heads >= 2");
    }

    Rng rng_batch = derived_rng(cfg.seed, streams::kBatch);
    Rng rng_rem = derived_rng(cfg.seed, streams::kRem);

    std::vector<StepLog> log;
    for (long step = 1; step <= cfg.steps; ++step) {
        const auto idx = sample_minibatch(store, cfg.batch, rng_batch);
        const auto batch = gather(store, idx);
        const MixtureWeights alpha = sample_mixture(model.dims.k_heads, rng_rem);

        StepLog row;
        row.step = step;
        row.mean_w = 1.0;

        // Both losses differentiate the same parameter snapshot; updates
        // apply after both gradient computations.
        TdGrads td;
        if (td_on) {
            const TargetBatch targets = penalized_target(batch, model.ens, model.table,
                                                         model.enc_head, cfg.penalty, alpha);
            td = td_loss_grads(batch, targets, alpha, model.ens, model.table, model.enc_head);
            row.td_loss = td.loss;
            double sig = 0.0, w = 0.0;
            for (std::size_t i = 0; i < targets.y.size(); ++i) {
                sig += targets.sigma_at_max[i];
                w += targets.w_at_max[i];
            }
            row.mean_sigma = sig / static_cast<double>(targets.y.size());
            row.mean_w = w / static_cast<double>(targets.y.size());
        }

        CeGrads ce;
        if (ce_on) {
            Vec q_weights(batch.size(), 1.0);
            if (cfg.ablation == AblationMode::q_critic) {
                for (std::size_t i = 0; i < batch.size(); ++i) {
                    const Vec features = model.encode_state(batch[i]->state);
                    q_weights[i] = q_weight_for_ce(model.ens, features, batch[i]->action);
                }
            }
            ce = ce_loss_grads(batch, q_weights, model.ce_head, model.table, model.enc_head);
            row.ce_loss = ce.loss;
        }

        if (td_on) {
            for (int k = 0; k < model.ens.heads(); ++k) {
                adam_step(model.ens.online[static_cast<std::size_t>(k)],
                          td.heads[static_cast<std::size_t>(k)],
                          opt.heads[static_cast<std::size_t>(k)], cfg.adam);
            }
        }
        if (ce_on) {
            adam_step(model.ce_head, ce.ce_head, opt.ce_head, cfg.adam);
        }
        // Shared encoder: one Adam step on the summed gradients.
        if (td_on && ce_on) {
            td.enc_head.add(ce.enc_head);
            for (std::size_t i = 0; i < td.table.size(); ++i) td.table[i] += ce.table[i];
        }
        GradientSet& enc_grad = td_on ? td.enc_head : ce.enc_head;
        Vec& table_grad = td_on ? td.table : ce.table;
        adam_step(model.enc_head, enc_grad, opt.enc_head, cfg.adam);
        adam_step_flat(model.table.data, table_grad, opt.table, cfg.adam);

        if (td_on) {
            model.ens.steps_since_sync += 1;
            if (model.ens.steps_since_sync >= cfg.sync_period) target_sync(model.ens);
        }

        if (step % cfg.log_every == 0 || step == cfg.steps) log.push_back(row);
    }
    return log;
}

RecommendationList serve(const Model& model, const StateWindow& w, int k,
                         AblationMode ablation) {
    const Vec features = model.encode_state(w);
    if (ablation == AblationMode::q_only) {
        return recommend_greedy_q(model.ens, features, k);
    }
    return recommend_topk(forward(model.ce_head, features), k);
}

ServingPolicy greedy_policy(const Model& model, AblationMode ablation) {
    return [&model, ablation](const StateWindow& w) {
        return serve(model, w, 1, ablation).front().item;
    };
}

// ----- checkpoint container ------------------------------------------------

using nlohmann::json;

void save_model(const Model& model, const std::string& path) {
    json body;
    body["dims"] = {{"catalog", model.dims.catalog},
                    {"window_len", model.dims.window_len},
                    {"d_embed", model.dims.d_embed},
                    {"d_state", model.dims.d_state},
                    {"q_hidden", model.dims.q_hidden},
                    {"ce_hidden", model.dims.ce_hidden},
                    {"k_heads", model.dims.k_heads}};
    body["table"] = table_to_json(model.table);
    body["enc_head"] = net_to_json(model.enc_head);
    json online = json::array(), target = json::array();
    for (const DenseNet& head : model.ens.online) online.push_back(net_to_json(head));
    for (const DenseNet& head : model.ens.target) target.push_back(net_to_json(head));
    body["q_online"] = std::move(online);
    body["q_target"] = std::move(target);
    body["steps_since_sync"] = model.ens.steps_since_sync;
    body["ce_head"] = net_to_json(model.ce_head);
    write_text_file(path, wrap_checkpoint(std::move(body)).dump(1, '\t') + "\n");
}

Model load_model(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw DataError(std::string("checkpoint: parse failure: ") + e.what());
    }
    const json body = unwrap_checkpoint(j);
    try {
        Model m;
        const json& d = body.at("dims");
        m.dims.catalog = d.at("catalog").get<int>();
        m.dims.window_len = d.at("window_len").get<int>();
        m.dims.d_embed = d.at("d_embed").get<int>();
        m.dims.d_state = d.at("d_state").get<int>();
        m.dims.q_hidden = d.at("q_hidden").get<int>();
        m.dims.ce_hidden = d.at("ce_hidden").get<int>();
        m.dims.k_heads = d.at("k_heads").get<int>();
        m.dims.validate();
        m.table = table_from_json(body.at("table"));
        m.enc_head = net_from_json(body.at("enc_head"));
        for (const json& h : body.at("q_online")) m.ens.online.push_back(net_from_json(h));
        for (const json& h : body.at("q_target")) m.ens.target.push_back(net_from_json(h));
        m.ens.steps_since_sync = body.at("steps_since_sync").get<long>();
        m.ce_head = net_from_json(body.at("ce_head"));
        if (static_cast<int>(m.ens.online.size()) != m.dims.k_heads ||
            m.ens.online.size() != m.ens.target.size()) {
            throw DataError("checkpoint: head count does not match dims");
        }
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("checkpoint: malformed model record: ") + e.what());
    }
}

// ----- evaluation ----------------------------------------------------------

MetricsReport evaluate_model(const Model& model, const TransitionStore& store,
                             const std::vector<int>& k_list, AblationMode ablation,
                             std::vector<RankedCase>* cases) {
    if (k_list.empty()) throw ConfigError("evaluate: empty k list");
    if (store.catalog() != model.dims.catalog) {
        throw ConfigError("evaluate: store catalog does not match the model");
    }
    const int depth = *std::max_element(k_list.begin(), k_list.end());
    std::vector<RecommendationList> lists;
    std::vector<GroundTruth> truths;
    for (std::size_t i = 0; i < store.size(); ++i) {
        const Transition& t = store.at(i);
        if (t.event == EventType::skip) continue;
        RecommendationList topk = serve(model, t.state, depth, ablation);
        truths.push_back({t.action, t.event});
        if (cases) cases->push_back({t.state, t.action, t.event, topk});
        lists.push_back(std::move(topk));
    }
    return evaluate_ranking(lists, truths, k_list);
}

std::string rankings_jsonl(const std::vector<RankedCase>& cases) {
    std::ostringstream out;
    for (const RankedCase& c : cases) {
        json row;
        row["window"] = std::vector<std::int32_t>(c.window.ids().begin(), c.window.ids().end());
        row["truth_item"] = c.truth_item;
        row["truth_type"] = event_name(c.truth_event);
        std::vector<std::int32_t> ids;
        ids.reserve(c.topk.size());
        for (const Recommendation& r : c.topk) ids.push_back(r.item);
        row["topk"] = std::move(ids);
        out << row.dump() << '\n';
    }
    return out.str();
}

} // namespace vpq
