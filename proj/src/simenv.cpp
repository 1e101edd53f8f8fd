#include "vpq/simenv.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vpq {

namespace {

// Sub-stream tags fed to mix64 on top of a caller seed. Distinct from the
// global stream ids in rng.hpp so the two layers never collide.
constexpr std::uint64_t kTagItems = 11;
constexpr std::uint64_t kTagSession = 12;
constexpr std::uint64_t kTagEpisode = 13;
constexpr std::uint64_t kTagCoverage = 14;
constexpr std::uint64_t kTagRewards = 15;

void normalize(Vec& v) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-12) {
        std::fill(v.begin(), v.end(), 0.0);
        v[0] = 1.0;
        return;
    }
    for (double& x : v) x /= norm;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

} // namespace

void SimConfig::validate() const {
    if (n_items < 1) throw ConfigError("sim: n_items must be >= 1");
    if (d_latent < 1) throw ConfigError("sim: d_latent must be >= 1");
    if (!(theta_p > theta_c)) throw ConfigError("sim: theta_p must exceed theta_c");
    if (drift < 0.0) throw ConfigError("sim: drift must be >= 0");
    if (p_end <= 0.0 || p_end > 1.0) throw ConfigError("sim: p_end must be in (0, 1]");
    if (max_session_len < 1) throw ConfigError("sim: max_session_len must be >= 1");
}

SimWorld SimWorld::create(const SimConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    SimWorld world;
    world.cfg = cfg;
    world.seed = seed;
    world.items = Mat(cfg.n_items, cfg.d_latent);
    Rng rng(mix64(seed, kTagItems));
    for (int i = 0; i < cfg.n_items; ++i) {
        Vec v(static_cast<std::size_t>(cfg.d_latent));
        for (double& x : v) x = rng.normal();
        normalize(v);
        std::copy(v.begin(), v.end(), world.items.row(i).begin());
    }
    return world;
}

std::span<const double> SimWorld::item_latent(std::int32_t id) const {
    if (id < 1 || id > cfg.n_items) throw ContractError("sim: item id outside catalog");
    return items.row(id - 1);
}

UserState initial_user(const SimWorld& world, Rng& rng) {
    UserState user;
    user.latent.resize(static_cast<std::size_t>(world.cfg.d_latent));
    for (double& x : user.latent) x = rng.normal();
    normalize(user.latent);
    return user;
}

StepResult env_step(const SimWorld& world, UserState& user, std::int32_t action,
                    Rng& rng) {
    const auto item = world.item_latent(action);
    const double affinity = dot(user.latent, item);

    StepResult result;
    if (affinity >= world.cfg.theta_p) {
        result.reward = 1.0;
        result.event = EventType::purchase;
    } else if (affinity >= world.cfg.theta_c) {
        result.reward = 0.2;
        result.event = EventType::click;
    }

    if (result.reward > 0.0 && world.cfg.drift > 0.0) {
        for (std::size_t i = 0; i < user.latent.size(); ++i) {
            user.latent[i] += world.cfg.drift * (item[i] - user.latent[i]);
        }
        normalize(user.latent);
    }
    user.step += 1;
    result.ended = rng.uniform() < world.cfg.p_end;
    return result;
}

BehaviorPolicy BehaviorPolicy::from_name(const std::string& name, double epsilon) {
    BehaviorPolicy p;
    if (name == "uniform") {
        p.kind = PolicyKind::uniform;
    } else if (name == "popularity") {
        p.kind = PolicyKind::popularity;
    } else if (name == "epsilon_oracle") {
        p.kind = PolicyKind::epsilon_oracle;
        if (epsilon < 0.0 || epsilon > 1.0) {
            throw ConfigError("behavior policy: epsilon must be in [0, 1]");
        }
        p.epsilon = epsilon;
    } else {
        throw ConfigError("unknown behavior policy: '" + name + "'");
    }
    return p;
}

std::string BehaviorPolicy::name() const {
    switch (kind) {
    case PolicyKind::uniform: return "uniform";
    case PolicyKind::popularity: return "popularity";
    case PolicyKind::epsilon_oracle: return "epsilon_oracle";
    }
    return "?";
}

std::int32_t sample_action(const BehaviorPolicy& policy, const SimWorld& world,
                           const UserState& user, Rng& rng) {
    const int n = world.cfg.n_items;
    switch (policy.kind) {
    case PolicyKind::uniform:
        return static_cast<std::int32_t>(rng.uniform_int(static_cast<std::uint64_t>(n))) + 1;
    case PolicyKind::popularity: {
        // Zipf(1): P(item i) proportional to 1/i.
        double z = 0.0;
        for (int i = 1; i <= n; ++i) z += 1.0 / i;
        double u = rng.uniform() * z;
        for (int i = 1; i <= n; ++i) {
            u -= 1.0 / i;
            if (u < 0.0) return i;
        }
        return n;
    }
    case PolicyKind::epsilon_oracle: {
        if (rng.uniform() < policy.epsilon) {
            return static_cast<std::int32_t>(rng.uniform_int(static_cast<std::uint64_t>(n))) + 1;
        }
        int best = 1;
        double best_aff = dot(user.latent, world.items.row(0));
        for (int i = 2; i <= n; ++i) {
            const double aff = dot(user.latent, world.items.row(i - 1));
            if (aff > best_aff) {
                best_aff = aff;
                best = i;
            }
        }
        return best;
    }
    }
    throw ContractError("sample_action: bad policy kind");
}

std::vector<SessionRecord> generate_dataset(const SimWorld& world,
                                            const BehaviorPolicy& policy,
                                            int n_sessions, std::uint64_t seed) {
    if (n_sessions < 1) throw ContractError("generate_dataset: n_sessions must be >= 1");
    std::vector<SessionRecord> log;
    const std::uint64_t base = mix64(seed, kTagSession);
    for (int s = 0; s < n_sessions; ++s) {
        Rng rng(mix64(base, static_cast<std::uint64_t>(s)));
        UserState user = initial_user(world, rng);
        const std::string sid = "s" + std::to_string(s);
        for (int t = 0; t < world.cfg.max_session_len; ++t) {
            const std::int32_t action = sample_action(policy, world, user, rng);
            const StepResult step = env_step(world, user, action, rng);
            log.push_back({sid, t, action, step.event});
            if (step.ended) break;
        }
    }
    return log;
}

ReturnEstimate sim_true_return(const SimWorld& world, const ServingPolicy& policy,
                               int window_len, int n_episodes, double gamma,
                               std::uint64_t seed) {
    if (n_episodes < 1) throw ContractError("true_return: n_episodes must be >= 1");
    if (gamma < 0.0 || gamma >= 1.0) throw ConfigError("true_return: gamma must be in [0, 1)");
    const std::uint64_t base = mix64(seed, kTagEpisode);
    double sum = 0.0, sumsq = 0.0;
    for (int e = 0; e < n_episodes; ++e) {
        Rng rng(mix64(base, static_cast<std::uint64_t>(e)));
        UserState user = initial_user(world, rng);
        StateWindow window = StateWindow::empty(window_len);
        double ret = 0.0, discount = 1.0;
        for (int t = 0; t < world.cfg.max_session_len; ++t) {
            const std::int32_t action = policy(window);
            const StepResult step = env_step(world, user, action, rng);
            ret += discount * step.reward;
            discount *= gamma;
            window = push_item(window, action);
            if (step.ended) break;
        }
        sum += ret;
        sumsq += ret * ret;
    }
    ReturnEstimate est;
    est.episodes = n_episodes;
    est.mean = sum / n_episodes;
    if (n_episodes > 1) {
        const double var = (sumsq - sum * sum / n_episodes) / (n_episodes - 1);
        est.se = std::sqrt(std::max(0.0, var) / n_episodes);
    }
    return est;
}

// ----- micro MDP -----------------------------------------------------------

MicroMDP MicroMDP::create(int n_items, std::uint64_t seed, double slip) {
    if (n_items < 1 || n_items > 8) throw ConfigError("micro: n_items must be in [1, 8]");
    if (slip < 0.0 || slip >= 1.0) throw ConfigError("micro: slip must be in [0, 1)");
    MicroMDP mdp;
    mdp.n_items = n_items;
    mdp.slip = slip;
    mdp.seed = seed;

    const int states = mdp.n_states();
    mdp.next_state.assign(static_cast<std::size_t>(states),
                          std::vector<int>(static_cast<std::size_t>(n_items), 0));
    for (int s = 0; s < states; ++s) {
        const StateWindow w = mdp.window_of(s);
        for (int j = 1; j <= n_items; ++j) {
            mdp.next_state[static_cast<std::size_t>(s)][static_cast<std::size_t>(j - 1)] =
                mdp.state_index(push_item(w, j));
        }
    }

    mdp.reward = Mat(states, n_items);
    Rng rng(mix64(seed, kTagRewards));
    for (double& r : mdp.reward.data) {
        const double u = rng.uniform();
        r = u < 0.5 ? 0.0 : (u < 0.8 ? 0.2 : 1.0);
    }
    return mdp;
}

int MicroMDP::state_index(const StateWindow& w) const {
    if (w.length() != 2) throw ContractError("micro: window length must be 2");
    const std::int32_t a = w.at(0), b = w.at(1);
    if (b == kPaddingId) return 0;                       // (0, 0)
    if (a == kPaddingId) return b;                       // (0, b)
    return 1 + n_items + (a - 1) * n_items + (b - 1);    // (a, b)
}

StateWindow MicroMDP::window_of(int index) const {
    if (index < 0 || index >= n_states()) throw ContractError("micro: state index out of range");
    if (index == 0) return StateWindow::empty(2);
    if (index <= n_items) return StateWindow::from_ids({kPaddingId, index});
    const int pair = index - 1 - n_items;
    return StateWindow::from_ids({pair / n_items + 1, pair % n_items + 1});
}

int micro_step(const MicroMDP& mdp, int state, std::int32_t action, Rng& rng) {
    if (action < 1 || action > mdp.n_items) throw ContractError("micro: action outside catalog");
    int pushed = action;
    if (mdp.slip > 0.0 && rng.uniform() < mdp.slip) {
        pushed = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(mdp.n_items))) + 1;
    }
    return mdp.next_state[static_cast<std::size_t>(state)][static_cast<std::size_t>(pushed - 1)];
}

Mat value_iteration(const MicroMDP& mdp, double gamma, double tol) {
    if (gamma < 0.0 || gamma >= 1.0) throw ContractError("value_iteration: gamma must be in [0, 1)");
    if (tol <= 0.0) throw ContractError("value_iteration: tol must be positive");
    const int states = mdp.n_states();
    const int n = mdp.n_items;
    Mat q(states, n);
    Vec v(static_cast<std::size_t>(states), 0.0);
    // gamma = 0: one sweep lands exactly on the reward table.
    const double stop = gamma > 0.0 ? tol * (1.0 - gamma) / gamma : 0.0;
    while (true) {
        for (int s = 0; s < states; ++s) {
            double best = -1e300;
            for (int a = 0; a < n; ++a) best = std::max(best, q.at(s, a));
            v[static_cast<std::size_t>(s)] = best;
        }
        double delta = 0.0;
        for (int s = 0; s < states; ++s) {
            for (int a = 0; a < n; ++a) {
                const auto& row = mdp.next_state[static_cast<std::size_t>(s)];
                double ev;
                if (mdp.slip == 0.0) {
                    ev = v[static_cast<std::size_t>(row[static_cast<std::size_t>(a)])];
                } else {
                    double spread = 0.0;
                    for (int j = 0; j < n; ++j) {
                        spread += v[static_cast<std::size_t>(row[static_cast<std::size_t>(j)])];
                    }
                    ev = (1.0 - mdp.slip) * v[static_cast<std::size_t>(row[static_cast<std::size_t>(a)])] +
                         mdp.slip * spread / n;
                }
                const double updated = mdp.reward.at(s, a) + gamma * ev;
                delta = std::max(delta, std::fabs(updated - q.at(s, a)));
                q.at(s, a) = updated;
            }
        }
        if (delta <= stop) break;
    }
    return q;
}

std::vector<std::vector<std::int32_t>> micro_allowed_actions(const MicroMDP& mdp,
                                                             double coverage,
                                                             std::uint64_t seed) {
    if (coverage <= 0.0 || coverage > 1.0) throw ConfigError("micro: coverage must be in (0, 1]");
    const int keep = std::max(1, static_cast<int>(std::lround(coverage * mdp.n_items)));
    const std::uint64_t base = mix64(seed, kTagCoverage);
    std::vector<std::vector<std::int32_t>> allowed(static_cast<std::size_t>(mdp.n_states()));
    for (int s = 0; s < mdp.n_states(); ++s) {
        std::vector<std::int32_t> ids(static_cast<std::size_t>(mdp.n_items));
        std::iota(ids.begin(), ids.end(), 1);
        Rng rng(mix64(base, static_cast<std::uint64_t>(s)));
        // Fisher-Yates; only the first `keep` slots matter.
        for (std::size_t i = ids.size() - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>(rng.uniform_int(i + 1));
            std::swap(ids[i], ids[j]);
        }
        ids.resize(static_cast<std::size_t>(keep));
        std::sort(ids.begin(), ids.end());
        allowed[static_cast<std::size_t>(s)] = std::move(ids);
    }
    return allowed;
}

TransitionStore micro_generate_store(const MicroMDP& mdp, double coverage,
                                     int n_transitions, std::uint64_t seed) {
    if (n_transitions < 1) throw ContractError("micro: n_transitions must be >= 1");
    const auto allowed = micro_allowed_actions(mdp, coverage, seed);
    TransitionStore store(2, mdp.n_items);
    store.seed = seed;

    constexpr int kEpisodeLen = 50;
    const std::uint64_t base = mix64(seed, kTagEpisode);
    int emitted = 0;
    for (std::uint64_t episode = 0; emitted < n_transitions; ++episode) {
        Rng rng(mix64(base, episode));
        int state = 0; // empty window
        for (int t = 0; t < kEpisodeLen && emitted < n_transitions; ++t) {
            const auto& acts = allowed[static_cast<std::size_t>(state)];
            const std::int32_t action =
                acts[static_cast<std::size_t>(rng.uniform_int(acts.size()))];
            const int next = micro_step(mdp, state, action, rng);
            const double reward = mdp.reward.at(state, action - 1);
            Transition tr;
            tr.state = mdp.window_of(state);
            tr.action = action;
            tr.reward = reward;
            tr.next_state = mdp.window_of(next);
            tr.terminal = false;
            tr.event = reward == 1.0 ? EventType::purchase
                                     : (reward == 0.2 ? EventType::click : EventType::skip);
            store.add(std::move(tr));
            state = next;
            ++emitted;
        }
    }
    return store;
}

ReturnEstimate micro_true_return(const MicroMDP& mdp, const ServingPolicy& policy,
                                 int n_episodes, double gamma, std::uint64_t seed,
                                 int horizon) {
    if (n_episodes < 1) throw ContractError("true_return: n_episodes must be >= 1");
    if (gamma < 0.0 || gamma >= 1.0) throw ConfigError("true_return: gamma must be in [0, 1)");
    if (horizon <= 0) {
        // Truncate once gamma^H / (1 - gamma) falls under 1e-6 (gamma = 0
        // needs a single step).
        horizon = gamma > 0.0
                      ? static_cast<int>(std::ceil(std::log(1e-6 * (1.0 - gamma)) / std::log(gamma)))
                      : 1;
    }
    const std::uint64_t base = mix64(seed, kTagEpisode);
    double sum = 0.0, sumsq = 0.0;
    for (int e = 0; e < n_episodes; ++e) {
        Rng rng(mix64(base, static_cast<std::uint64_t>(e)));
        int state = 0;
        double ret = 0.0, discount = 1.0;
        for (int t = 0; t < horizon; ++t) {
            const std::int32_t action = policy(mdp.window_of(state));
            ret += discount * mdp.reward.at(state, action - 1);
            discount *= gamma;
            state = micro_step(mdp, state, action, rng);
        }
        sum += ret;
        sumsq += ret * ret;
    }
    ReturnEstimate est;
    est.episodes = n_episodes;
    est.mean = sum / n_episodes;
    if (n_episodes > 1) {
        const double var = (sumsq - sum * sum / n_episodes) / (n_episodes - 1);
        est.se = std::sqrt(std::max(0.0, var) / n_episodes);
    }
    return est;
}

} // namespace vpq
