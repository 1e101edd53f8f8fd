#include "vpq/data.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

#include "vpq/util.hpp"

namespace vpq {

const char* event_name(EventType t) {
    switch (t) {
    case EventType::skip: return "skip";
    case EventType::click: return "click";
    case EventType::purchase: return "purchase";
    }
    return "?";
}

EventType event_from_name(const std::string& name) {
    if (name == "skip") return EventType::skip;
    if (name == "click") return EventType::click;
    if (name == "purchase") return EventType::purchase;
    throw DataError("unknown behavior token: '" + name + "'");
}

double RewardMap::reward_for(EventType t) const {
    switch (t) {
    case EventType::skip: return skip;
    case EventType::click: return click;
    case EventType::purchase: return purchase;
    }
    return 0.0;
}

void TransitionStore::add(Transition t) {
    if (t.state.length() != window_len_ || t.next_state.length() != window_len_) {
        throw ContractError("TransitionStore: window length mismatch");
    }
    if (t.action < 1 || t.action > catalog_) {
        throw ContractError("TransitionStore: action id out of catalog range");
    }
    transitions_.push_back(std::move(t));
}

// ----- session CSV ---------------------------------------------------------

static const char* kSessionHeader = "session_id,timestamp,item_id,behavior";

std::vector<SessionRecord> load_sessions_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open session CSV: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty session CSV (missing header): " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kSessionHeader) {
        throw DataError("session CSV header mismatch in " + path + ": got '" + line + "'");
    }
    std::vector<SessionRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string sid, ts, item, behavior;
        if (!std::getline(ss, sid, ',') || !std::getline(ss, ts, ',') ||
            !std::getline(ss, item, ',') || !std::getline(ss, behavior)) {
            throw DataError("malformed row at line " + std::to_string(line_no) + " in " + path);
        }
        SessionRecord rec;
        rec.session_id = sid;
        try {
            std::size_t used = 0;
            rec.timestamp = std::stoll(ts, &used);
            if (used != ts.size()) throw std::invalid_argument(ts);
            rec.item_id = std::stoi(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw DataError("malformed row at line " + std::to_string(line_no) + " in " + path);
        }
        try {
            rec.behavior = event_from_name(behavior);
        } catch (const DataError&) {
            throw DataError("unknown behavior token at line " + std::to_string(line_no) +
                            " in " + path + ": '" + behavior + "'");
        }
        records.push_back(std::move(rec));
    }
    return records;
}

void write_sessions_csv(const std::string& path, const std::vector<SessionRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write session CSV: " + path);
    out << kSessionHeader << "\n";
    for (const auto& r : records) {
        out << r.session_id << ',' << r.timestamp << ',' << r.item_id << ','
            << event_name(r.behavior) << "\n";
    }
    if (!out) throw DataError("write failed: " + path);
}

// ----- id vocabulary -------------------------------------------------------

IdVocabulary IdVocabulary::build(const std::vector<SessionRecord>& records) {
    IdVocabulary v;
    for (const auto& r : records) v.raw_to_dense[r.item_id] = 0;
    std::int32_t next = 1;
    for (auto& [raw, dense] : v.raw_to_dense) dense = next++;
    return v;
}

std::int32_t IdVocabulary::dense(std::int32_t raw) const {
    auto it = raw_to_dense.find(raw);
    if (it == raw_to_dense.end()) {
        throw DataError("item id not in vocabulary: " + std::to_string(raw));
    }
    return it->second;
}

void IdVocabulary::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write vocabulary: " + path);
    out << "raw_id,dense_id\n";
    for (const auto& [raw, dense] : raw_to_dense) out << raw << ',' << dense << "\n";
}

IdVocabulary IdVocabulary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open vocabulary: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty vocabulary file: " + path);
    IdVocabulary v;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string raw, dense;
        if (!std::getline(ss, raw, ',') || !std::getline(ss, dense)) {
            throw DataError("malformed vocabulary row at line " + std::to_string(line_no));
        }
        v.raw_to_dense[std::stoi(raw)] = std::stoi(dense);
    }
    return v;
}

std::vector<SessionRecord> apply_vocabulary(const std::vector<SessionRecord>& records,
                                            const IdVocabulary& vocab) {
    std::vector<SessionRecord> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        SessionRecord m = r;
        m.item_id = vocab.dense(r.item_id);
        out.push_back(std::move(m));
    }
    return out;
}

// ----- transitions ---------------------------------------------------------

TransitionStore sessions_to_transitions(const std::vector<SessionRecord>& records,
                                        int window_len, int catalog,
                                        const RewardMap& rewards, bool include_skips) {
    if (window_len < 1) throw ContractError("window_len must be >= 1");
    if (catalog < 1) throw ContractError("catalog must be >= 1");

    // Group by session id, keeping first-appearance order of sessions.
    std::vector<std::string> order;
    std::map<std::string, std::vector<SessionRecord>> by_session;
    for (const auto& r : records) {
        auto [it, inserted] = by_session.try_emplace(r.session_id);
        if (inserted) order.push_back(r.session_id);
        it->second.push_back(r);
    }

    TransitionStore store(window_len, catalog);
    for (const auto& sid : order) {
        auto& events = by_session[sid];
        std::stable_sort(events.begin(), events.end(),
                         [](const SessionRecord& a, const SessionRecord& b) {
                             return a.timestamp < b.timestamp;
                         });
        StateWindow window = StateWindow::empty(window_len);
        for (std::size_t t = 0; t < events.size(); ++t) {
            const auto& ev = events[t];
            if (ev.item_id < 1 || ev.item_id > catalog) {
                throw ContractError("item id out of catalog range: " +
                                    std::to_string(ev.item_id));
            }
            Transition tr;
            tr.state = window;
            tr.action = ev.item_id;
            tr.event = ev.behavior;
            tr.reward = rewards.reward_for(ev.behavior);
            const bool enters_window = include_skips || ev.behavior != EventType::skip;
            tr.next_state = enters_window ? push_item(window, ev.item_id) : window;
            tr.terminal = (t + 1 == events.size());
            window = tr.next_state;
            store.add(std::move(tr));
        }
    }
    return store;
}

std::vector<std::size_t> sample_minibatch(const TransitionStore& store, int batch, Rng& rng) {
    if (store.size() == 0) throw ConfigError("sample_minibatch: empty store");
    if (batch < 1) throw ContractError("sample_minibatch: batch must be >= 1");
    std::vector<std::size_t> idx(static_cast<std::size_t>(batch));
    for (auto& i : idx) i = static_cast<std::size_t>(rng.uniform_int(store.size()));
    return idx;
}

// ----- binary store --------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'V', 'P', 'Q', 'S'};
constexpr std::uint32_t kStoreVersion = 1;

struct ByteSink {
    std::string bytes;

    void u8(std::uint8_t v) { bytes.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
};

struct ByteSource {
    const std::string& bytes;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > bytes.size()) throw DataError("store file truncated");
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(bytes[pos++]);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos++])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos++])) << (8 * i);
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
};

} // namespace

void save_store(const TransitionStore& store, const std::string& path) {
    ByteSink sink;
    sink.bytes.append(kMagic, 4);
    sink.u32(kStoreVersion);
    sink.u32(static_cast<std::uint32_t>(store.window_len()));
    sink.u32(static_cast<std::uint32_t>(store.catalog()));
    sink.u64(store.size());
    sink.u64(store.seed);
    sink.u64(store.config_hash);
    for (std::size_t i = 0; i < store.size(); ++i) {
        const Transition& t = store.at(i);
        for (std::int32_t id : t.state.ids()) sink.i32(id);
        sink.i32(t.action);
        sink.f64(t.reward);
        for (std::int32_t id : t.next_state.ids()) sink.i32(id);
        sink.u8(t.terminal ? 1 : 0);
        sink.u8(static_cast<std::uint8_t>(t.event));
    }
    const std::uint64_t hash = fnv1a64(sink.bytes.data(), sink.bytes.size());
    sink.u64(hash);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write store: " + path);
    out.write(sink.bytes.data(), static_cast<std::streamsize>(sink.bytes.size()));
    if (!out) throw DataError("write failed: " + path);
}

TransitionStore load_store(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open store: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string bytes = buf.str();
    if (bytes.size() < 4 + 4 + 4 + 4 + 8 + 8 + 8 + 8) throw DataError("store file truncated");

    ByteSource tail{bytes, bytes.size() - 8};
    const std::uint64_t expect = tail.u64();
    const std::uint64_t actual = fnv1a64(bytes.data(), bytes.size() - 8);
    if (expect != actual) throw DataError("store integrity hash mismatch: " + path);

    ByteSource src{bytes};
    src.need(4);
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw DataError("bad store magic: " + path);
    src.pos = 4;
    const std::uint32_t version = src.u32();
    if (version != kStoreVersion) {
        throw DataError("unsupported store version " + std::to_string(version) + ": " + path);
    }
    const int window_len = static_cast<int>(src.u32());
    const int catalog = static_cast<int>(src.u32());
    const std::uint64_t count = src.u64();
    TransitionStore store(window_len, catalog);
    store.seed = src.u64();
    store.config_hash = src.u64();
    for (std::uint64_t i = 0; i < count; ++i) {
        std::vector<std::int32_t> state(static_cast<std::size_t>(window_len));
        for (auto& id : state) id = src.i32();
        Transition t;
        t.state = StateWindow::from_ids(std::move(state));
        t.action = src.i32();
        t.reward = src.f64();
        std::vector<std::int32_t> next(static_cast<std::size_t>(window_len));
        for (auto& id : next) id = src.i32();
        t.next_state = StateWindow::from_ids(std::move(next));
        t.terminal = src.u8() != 0;
        t.event = static_cast<EventType>(src.u8());
        store.add(std::move(t));
    }
    if (src.pos != bytes.size() - 8) throw DataError("store has trailing garbage: " + path);
    return store;
}

} // namespace vpq
