#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vpq/data.hpp"
#include "vpq/encoder.hpp"
#include "vpq/rng.hpp"
#include "vpq/util.hpp"

namespace vpq {

// ----- latent-factor session simulator -------------------------------------

struct SimConfig {
    int n_items = 200;
    int d_latent = 8;
    double theta_c = 0.3;  // click threshold on user-item affinity
    double theta_p = 0.75; // purchase threshold, must exceed theta_c
    double drift = 0.1;    // preference drift per consumed (rewarded) item
    double p_end = 0.05;   // per-step session-end probability
    int max_session_len = 100;

    void validate() const;
};

// Ground-truth world: one unit-norm latent vector per item. Row i of `items`
// belongs to item id i+1.
struct SimWorld {
    SimConfig cfg;
    std::uint64_t seed = 0;
    Mat items;

    static SimWorld create(const SimConfig& cfg, std::uint64_t seed);

    std::span<const double> item_latent(std::int32_t id) const;
};

// Hidden user preference; unit norm after every drift step.
struct UserState {
    Vec latent;
    int step = 0;
};

// Fresh user drawn from the unit sphere.
UserState initial_user(const SimWorld& world, Rng& rng);

struct StepResult {
    double reward = 0.0;
    EventType event = EventType::skip;
    bool ended = false;
};

// One interaction: reward 1.0 if affinity >= theta_p, else 0.2 if >= theta_c,
// else 0. A rewarded item pulls the user latent toward itself by the drift
// rate (then renormalizes); skips leave the user untouched. Consumes exactly
// one uniform draw (the session-end coin).
StepResult env_step(const SimWorld& world, UserState& user, std::int32_t action,
                    Rng& rng);

enum class PolicyKind { uniform, popularity, epsilon_oracle };

struct BehaviorPolicy {
    PolicyKind kind = PolicyKind::epsilon_oracle;
    double epsilon = 0.5; // epsilon_oracle only: probability of a uniform action

    // "uniform" | "popularity" | "epsilon_oracle" (throws ConfigError otherwise)
    static BehaviorPolicy from_name(const std::string& name, double epsilon = 0.5);
    std::string name() const;
};

// Draws one action. epsilon_oracle picks the affinity-argmax item with
// probability 1-epsilon (ties to the lowest id) and a uniform item otherwise;
// popularity samples from a Zipf(1) law over item ids.
std::int32_t sample_action(const BehaviorPolicy& policy, const SimWorld& world,
                           const UserState& user, Rng& rng);

// n_sessions logged sessions including zero-reward skips; timestamps are the
// step index within the session. Bit-reproducible per (world, policy, seed):
// session i runs on its own rng derived as mix64(mix64(seed, tag), i).
std::vector<SessionRecord> generate_dataset(const SimWorld& world,
                                            const BehaviorPolicy& policy,
                                            int n_sessions, std::uint64_t seed);

// Serving policy under evaluation: sees only the observable item window.
using ServingPolicy = std::function<std::int32_t(const StateWindow&)>;

struct ReturnEstimate {
    double mean = 0.0;
    double se = 0.0;
    int episodes = 0;
};

// Monte-Carlo discounted return of `policy` on fresh users; window_len is the
// observation window the policy expects.
ReturnEstimate sim_true_return(const SimWorld& world, const ServingPolicy& policy,
                               int window_len, int n_episodes, double gamma,
                               std::uint64_t seed);

// ----- tabular micro MDP ---------------------------------------------------

// Desk-scale MDP over length-2 item windows: states enumerate the empty
// window, the n single-item windows, and all n^2 pairs (1 + n + n^2 total).
// Pushing item j moves window (a,b) to (b,j); with slip > 0 the pushed item
// is redrawn uniformly with that probability. Rewards live in {0, 0.2, 1.0}
// and depend on (state, action) only.
struct MicroMDP {
    int n_items = 0;
    double slip = 0.0;
    std::uint64_t seed = 0;
    Mat reward;                               // n_states x n_items
    std::vector<std::vector<int>> next_state; // [state][pushed item - 1]

    // n_items in [1, 8]; reward cells drawn iid from {0, 0.2, 1.0} with
    // probabilities {0.5, 0.3, 0.2}.
    static MicroMDP create(int n_items, std::uint64_t seed, double slip = 0.0);

    int n_states() const { return 1 + n_items + n_items * n_items; }
    int state_index(const StateWindow& w) const;
    StateWindow window_of(int index) const;
};

// Environment step; consumes rng only when slip > 0 (one coin, plus one
// bounded int when the slip fires).
int micro_step(const MicroMDP& mdp, int state, std::int32_t action, Rng& rng);

// Exact Q*: sweeps Q <- TQ until the sup-norm change drops below
// tol*(1-gamma)/gamma, which bounds ||Q - Q*||_inf by tol.
Mat value_iteration(const MicroMDP& mdp, double gamma, double tol);

// Per-state allowed-action sets covering max(1, round(coverage * n_items))
// actions, chosen by a seeded shuffle; the complement is genuinely
// out-of-distribution in any dataset built from these sets.
std::vector<std::vector<std::int32_t>> micro_allowed_actions(const MicroMDP& mdp,
                                                             double coverage,
                                                             std::uint64_t seed);

// Behavior data for the micro environment: episodes start at the empty
// window, actions are uniform over the state's allowed set, and transitions
// are logged with terminal=false (the MDP is continuing; episode cuts are a
// logging artifact, not environment resets).
TransitionStore micro_generate_store(const MicroMDP& mdp, double coverage,
                                     int n_transitions, std::uint64_t seed);

// Monte-Carlo discounted return from the empty window. horizon <= 0 picks
// the truncation depth so the discarded tail is below 1e-6 of the value
// scale.
ReturnEstimate micro_true_return(const MicroMDP& mdp, const ServingPolicy& policy,
                                 int n_episodes, double gamma, std::uint64_t seed,
                                 int horizon = 0);

} // namespace vpq
