#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vpq/encoder.hpp"
#include "vpq/rng.hpp"

namespace vpq {

enum class EventType : std::uint8_t { skip = 0, click = 1, purchase = 2 };

const char* event_name(EventType t);
EventType event_from_name(const std::string& name); // throws DataError on unknown token

// Reward per logged behavior. Values are the only rewards the system emits.
struct RewardMap {
    double skip = 0.0;
    double click = 0.2;
    double purchase = 1.0;

    double reward_for(EventType t) const;
};

struct SessionRecord {
    std::string session_id;
    std::int64_t timestamp = 0;
    std::int32_t item_id = 0;
    EventType behavior = EventType::skip;

    bool operator==(const SessionRecord&) const = default;
};

struct Transition {
    StateWindow state;
    std::int32_t action = 0;
    double reward = 0.0;
    StateWindow next_state;
    bool terminal = false;
    EventType event = EventType::skip;
};

// Immutable after construction; O(1) random access.
class TransitionStore {
public:
    TransitionStore(int window_len, int catalog)
        : window_len_(window_len), catalog_(catalog) {}

    void add(Transition t);
    std::size_t size() const { return transitions_.size(); }
    const Transition& at(std::size_t i) const { return transitions_[i]; }
    int window_len() const { return window_len_; }
    int catalog() const { return catalog_; }

    std::uint64_t seed = 0;        // generator seed, when synthetic
    std::uint64_t config_hash = 0; // hash of the generating config

private:
    std::vector<Transition> transitions_;
    int window_len_;
    int catalog_;
};

// ----- session CSV (schema: session_id,timestamp,item_id,behavior) --------

std::vector<SessionRecord> load_sessions_csv(const std::string& path);
void write_sessions_csv(const std::string& path, const std::vector<SessionRecord>& records);

// Maps sparse raw item ids onto dense 1..N by ascending raw id. Persisted as
// a CSV with header raw_id,dense_id.
struct IdVocabulary {
    std::map<std::int32_t, std::int32_t> raw_to_dense;

    static IdVocabulary build(const std::vector<SessionRecord>& records);
    std::int32_t dense(std::int32_t raw) const; // throws DataError for unmapped ids
    int size() const { return static_cast<int>(raw_to_dense.size()); }
    void save(const std::string& path) const;
    static IdVocabulary load(const std::string& path);
};

std::vector<SessionRecord> apply_vocabulary(const std::vector<SessionRecord>& records,
                                            const IdVocabulary& vocab);

// Groups by session (first-appearance order), sorts by timestamp within each
// session, and unrolls every event into one transition. The state of event t
// is the window over the preceding items; the final event of a session is
// terminal. With include_skips=false skipped items stay out of the windows
// and a skip transition keeps next_state == state.
TransitionStore sessions_to_transitions(const std::vector<SessionRecord>& records,
                                        int window_len, int catalog,
                                        const RewardMap& rewards = {},
                                        bool include_skips = true);

// Uniform with replacement; deterministic for a given rng state.
std::vector<std::size_t> sample_minibatch(const TransitionStore& store, int batch,
                                          Rng& rng);

// Binary container with an FNV-1a64 integrity trailer; layout documented in
// docs/FORMATS.md.
void save_store(const TransitionStore& store, const std::string& path);
TransitionStore load_store(const std::string& path);

} // namespace vpq
