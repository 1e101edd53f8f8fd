#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "helpers.hpp"
#include "vpq/critic.hpp"

using namespace vpq;

namespace {

double reference_ce(const Vec& logits, std::int32_t action) {
    // independent log-softmax: normalize against the exact log-sum-exp
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    const double log_z = mx + std::log(z);
    return -(logits[static_cast<std::size_t>(action - 1)] - log_z);
}

QEnsemble constant_heads(const std::vector<double>& per_head, int d_state, int actions) {
    Rng rng(0);
    QEnsemble ens = QEnsemble::init(static_cast<int>(per_head.size()), {d_state, 3, actions}, rng);
    for (std::size_t h = 0; h < per_head.size(); ++h) {
        for (auto& w : ens.online[h].weights)
            for (double& x : w) x = 0.0;
        for (auto& b : ens.online[h].biases)
            for (double& x : b) x = 0.0;
        for (double& x : ens.online[h].biases[1]) x = per_head[h];
    }
    target_sync(ens);
    return ens;
}

} // namespace

TEST_CASE("ce_loss_reweighted: unit weight is plain cross-entropy") {
    const Vec logits{0.2, -1.0, 1.5, 0.0};
    for (std::int32_t action = 1; action <= 4; ++action) {
        CHECK(ce_loss_reweighted(logits, action, 1.0) ==
              doctest::Approx(reference_ce(logits, action)).epsilon(1e-12));
    }
}

TEST_CASE("ce_loss_reweighted: zero weight kills loss and gradient") {
    const Vec logits{0.4, 2.0, -0.3};
    CHECK(ce_loss_reweighted(logits, 2, 0.0) == 0.0);
    const Vec grad = ce_loss_logit_grad(logits, 2, 0.0);
    for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("ce_loss_reweighted scales linearly in the weight") {
    const Vec logits{0.4, 2.0, -0.3};
    const double base = ce_loss_reweighted(logits, 3, 1.0);
    CHECK(ce_loss_reweighted(logits, 3, 2.0) == doctest::Approx(2.0 * base).epsilon(1e-14));

    const Vec g1 = ce_loss_logit_grad(logits, 3, 1.0);
    const Vec g2 = ce_loss_logit_grad(logits, 3, 2.0);
    for (std::size_t i = 0; i < g1.size(); ++i) {
        CHECK(g2[i] == doctest::Approx(2.0 * g1[i]).epsilon(1e-14));
    }
    // doubling the weight doubles the gradient norm exactly
    const double n1 = std::sqrt(std::inner_product(g1.begin(), g1.end(), g1.begin(), 0.0));
    const double n2 = std::sqrt(std::inner_product(g2.begin(), g2.end(), g2.begin(), 0.0));
    CHECK(n2 == doctest::Approx(2.0 * n1).epsilon(1e-14));
}

TEST_CASE("ce loss rejects the padding action") {
    const Vec logits{0.1, 0.2};
    CHECK_THROWS_AS(ce_loss_reweighted(logits, kPaddingId, 1.0), ContractError);
    CHECK_THROWS_AS(ce_loss_reweighted(logits, 3, 1.0), ContractError);
    CHECK_THROWS_AS(ce_loss_logit_grad(logits, 0, 1.0), ContractError);
}

TEST_CASE("ce logit gradient matches finite differences") {
    Rng rng(3);
    Vec logits(5);
    for (double& l : logits) l = rng.normal();
    const std::int32_t action = 4;
    const double q = 1.7;
    const Vec grad = ce_loss_logit_grad(logits, action, q);
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double h = 1e-6;
        const double keep = logits[i];
        logits[i] = keep + h;
        const double up = ce_loss_reweighted(logits, action, q);
        logits[i] = keep - h;
        const double dn = ce_loss_reweighted(logits, action, q);
        logits[i] = keep;
        CHECK(grad[i] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-5));
    }
}

TEST_CASE("softmax shift invariance carries into the loss") {
    const Vec logits{0.5, -0.2, 1.1};
    Vec shifted = logits;
    for (double& l : shifted) l += 100.0;
    CHECK(ce_loss_reweighted(shifted, 2, 1.0) ==
          doctest::Approx(ce_loss_reweighted(logits, 2, 1.0)).epsilon(1e-10));
}

TEST_CASE("q_weight_for_ce means the online heads and floors at zero") {
    const Vec s{0.0, 0.0, 0.0};
    CHECK(q_weight_for_ce(constant_heads({0.0, 0.0}, 3, 4), s, 2) == 0.0);
    CHECK(q_weight_for_ce(constant_heads({1.0, 3.0}, 3, 4), s, 2) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(q_weight_for_ce(constant_heads({-2.0, -4.0}, 3, 4), s, 2) == 0.0);
}

TEST_CASE("recommend_topk orders by score with ascending-id tie-break") {
    const Vec equal{0.5, 0.5, 0.5, 0.5, 0.5};
    const RecommendationList ties = recommend_topk(equal, 3);
    REQUIRE(ties.size() == 3);
    CHECK(ties[0].item == 1);
    CHECK(ties[1].item == 2);
    CHECK(ties[2].item == 3);

    Vec onehot(9, 0.0);
    onehot[6] = 5.0; // item 7
    const RecommendationList top1 = recommend_topk(onehot, 1);
    REQUIRE(top1.size() == 1);
    CHECK(top1[0].item == 7);
    CHECK(top1[0].score == 5.0);

    CHECK(recommend_topk(equal, 50).size() == 5); // clamped to the catalog
    CHECK_THROWS_AS(recommend_topk(equal, 0), ContractError);
}

TEST_CASE("recommend_topk matches a full-sort oracle") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        Vec logits(12);
        for (double& l : logits) l = rng.normal();
        const int k = 1 + static_cast<int>(rng.uniform_int(12));
        const RecommendationList got = recommend_topk(logits, k);

        std::vector<int> order(logits.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (logits[static_cast<std::size_t>(a)] != logits[static_cast<std::size_t>(b)]) {
                return logits[static_cast<std::size_t>(a)] > logits[static_cast<std::size_t>(b)];
            }
            return a < b;
        });
        REQUIRE(got.size() == static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) {
            CHECK(got[static_cast<std::size_t>(i)].item == order[static_cast<std::size_t>(i)] + 1);
            CHECK(got[static_cast<std::size_t>(i)].score == logits[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
        }
    }
}

TEST_CASE("recommend_topk is invariant to constant logit shifts") {
    Rng rng(6);
    Vec logits(8);
    for (double& l : logits) l = rng.normal();
    Vec shifted = logits;
    for (double& l : shifted) l += 3.25;
    const RecommendationList a = recommend_topk(logits, 4);
    const RecommendationList b = recommend_topk(shifted, 4);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].item == b[i].item);
}

TEST_CASE("recommend_greedy_q ranks by the ensemble mean") {
    const Vec s{0.0, 0.0, 0.0};
    const QEnsemble flat = constant_heads({1.0, 1.0}, 3, 5);
    const RecommendationList ties = recommend_greedy_q(flat, s, 3);
    CHECK(ties[0].item == 1);
    CHECK(ties[1].item == 2);
    CHECK(ties[2].item == 3);

    Rng rng(7);
    QEnsemble ens = QEnsemble::init(3, {3, 4, 6}, rng);
    Vec state(3);
    for (double& v : state) v = rng.normal();
    const RecommendationList got = recommend_greedy_q(ens, state, 6);

    // exhaustive mean-Q oracle
    Vec mean(6, 0.0);
    for (const DenseNet& head : ens.online) {
        const Vec q = forward(head, state);
        for (std::size_t a = 0; a < 6; ++a) mean[a] += q[a];
    }
    for (double& m : mean) m /= 3.0;
    std::vector<int> order(6);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (mean[static_cast<std::size_t>(a)] != mean[static_cast<std::size_t>(b)]) {
            return mean[static_cast<std::size_t>(a)] > mean[static_cast<std::size_t>(b)];
        }
        return a < b;
    });
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].item == order[i] + 1);
        CHECK(got[i].score == doctest::Approx(mean[static_cast<std::size_t>(order[i])]).epsilon(1e-12));
    }
}

TEST_CASE("batch ce loss averages the per-sample losses") {
    Rng rng(8);
    const int catalog = 4, d_embed = 3, d_state = 3;
    EmbeddingTable table = EmbeddingTable::init(catalog, d_embed, rng);
    DenseNet enc = DenseNet::init({d_embed, d_state, d_state}, rng);
    DenseNet ce_head = DenseNet::init({d_state, 5, catalog}, rng);

    std::vector<Transition> batch_data;
    for (int i = 0; i < 3; ++i) {
        Transition t;
        t.state = i == 0 ? StateWindow::empty(4) : StateWindow::from_ids({0, 0, 1, static_cast<std::int32_t>(i + 1)});
        t.action = static_cast<std::int32_t>(i + 1);
        t.next_state = push_item(t.state, t.action);
        batch_data.push_back(t);
    }
    std::vector<const Transition*> batch;
    for (const auto& t : batch_data) batch.push_back(&t);
    const Vec weights{1.0, 0.5, 2.0};

    double expect = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Vec logits = forward(ce_head, encode(batch[i]->state, table, enc));
        expect += ce_loss_reweighted(logits, batch[i]->action, weights[i]);
    }
    expect /= static_cast<double>(batch.size());

    CHECK(ce_loss_value(batch, weights, ce_head, table, enc) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(ce_loss_grads(batch, weights, ce_head, table, enc).loss == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("batch ce gradients match finite differences") {
    Rng rng(9);
    const int catalog = 3, d_embed = 3, d_state = 3;
    EmbeddingTable table = EmbeddingTable::init(catalog, d_embed, rng);
    DenseNet enc = DenseNet::init({d_embed, d_state, d_state}, rng);
    DenseNet ce_head = DenseNet::init({d_state, 4, catalog}, rng);

    std::vector<Transition> batch_data;
    for (int i = 0; i < 3; ++i) {
        Transition t;
        t.state = StateWindow::from_ids({0, 0, static_cast<std::int32_t>(i % catalog + 1)});
        t.action = static_cast<std::int32_t>((i + 1) % catalog + 1);
        t.next_state = push_item(t.state, t.action);
        batch_data.push_back(t);
    }
    std::vector<const Transition*> batch;
    for (const auto& t : batch_data) batch.push_back(&t);
    const Vec weights{1.0, 0.3, 1.6};

    const CeGrads grads = ce_loss_grads(batch, weights, ce_head, table, enc);
    const auto loss = [&]() { return ce_loss_value(batch, weights, ce_head, table, enc); };

    CHECK(testutil::fd_max_rel(testutil::net_slots(ce_head), testutil::grad_values(grads.ce_head), loss) < 1e-4);
    CHECK(testutil::fd_max_rel(testutil::net_slots(enc), testutil::grad_values(grads.enc_head), loss) < 1e-4);
    CHECK(testutil::fd_max_rel(testutil::table_slots(table), grads.table, loss) < 1e-4);
}

TEST_CASE("ablation mode names round-trip") {
    CHECK(ablation_mode_from_name("q_critic") == AblationMode::q_critic);
    CHECK(ablation_mode_from_name("q_aux") == AblationMode::q_aux);
    CHECK(ablation_mode_from_name("ce_only") == AblationMode::ce_only);
    CHECK(ablation_mode_from_name("q_only") == AblationMode::q_only);
    CHECK(std::string(ablation_mode_name(AblationMode::q_aux)) == "q_aux");
    CHECK_THROWS_AS(ablation_mode_from_name("hybrid"), ConfigError);
}
