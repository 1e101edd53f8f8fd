#include "vpq/config.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

namespace vpq {

namespace {

using IntField = int RunConfig::*;
using LongField = long RunConfig::*;
using DoubleField = double RunConfig::*;
using StringField = std::string RunConfig::*;
using SeedField = std::uint64_t RunConfig::*;
using Field = std::variant<IntField, LongField, DoubleField, StringField, SeedField>;

const std::vector<std::pair<const char*, Field>>& fields() {
    static const std::vector<std::pair<const char*, Field>> table = {
        {"n_items", &RunConfig::n_items},
        {"d_latent", &RunConfig::d_latent},
        {"theta_c", &RunConfig::theta_c},
        {"theta_p", &RunConfig::theta_p},
        {"drift", &RunConfig::drift},
        {"p_end", &RunConfig::p_end},
        {"max_session_len", &RunConfig::max_session_len},
        {"behavior", &RunConfig::behavior},
        {"epsilon", &RunConfig::epsilon},
        {"n_sessions", &RunConfig::n_sessions},
        {"window_len", &RunConfig::window_len},
        {"d_embed", &RunConfig::d_embed},
        {"d_state", &RunConfig::d_state},
        {"q_hidden", &RunConfig::q_hidden},
        {"ce_hidden", &RunConfig::ce_hidden},
        {"k_heads", &RunConfig::k_heads},
        {"penalty", &RunConfig::penalty},
        {"lambda", &RunConfig::lambda},
        {"gamma", &RunConfig::gamma},
        {"ablation", &RunConfig::ablation},
        {"steps", &RunConfig::steps},
        {"batch", &RunConfig::batch},
        {"sync_period", &RunConfig::sync_period},
        {"lr", &RunConfig::lr},
        {"beta1", &RunConfig::beta1},
        {"beta2", &RunConfig::beta2},
        {"adam_eps", &RunConfig::adam_eps},
        {"log_every", &RunConfig::log_every},
        {"k_list", &RunConfig::k_list},
        {"eval_episodes", &RunConfig::eval_episodes},
        {"seed", &RunConfig::seed},
    };
    return table;
}

long parse_long(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    long parsed = 0;
    try {
        parsed = std::stol(value, &used);
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer for '" + key + "': '" + value + "'");
    }
    if (used != value.size()) {
        throw ConfigError("config: bad integer for '" + key + "': '" + value + "'");
    }
    return parsed;
}

double parse_double(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double parsed = 0.0;
    try {
        parsed = std::stod(value, &used);
    } catch (const std::exception&) {
        throw ConfigError("config: bad number for '" + key + "': '" + value + "'");
    }
    if (used != value.size()) {
        throw ConfigError("config: bad number for '" + key + "': '" + value + "'");
    }
    return parsed;
}

std::uint64_t parse_seed(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    unsigned long long parsed = 0;
    try {
        parsed = std::stoull(value, &used);
    } catch (const std::exception&) {
        throw ConfigError("config: bad seed for '" + key + "': '" + value + "'");
    }
    if (used != value.size()) {
        throw ConfigError("config: bad seed for '" + key + "': '" + value + "'");
    }
    return parsed;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

void render(std::ostringstream& out, const RunConfig& cfg, const Field& field) {
    if (const auto* f = std::get_if<IntField>(&field)) {
        out << cfg.**f;
    } else if (const auto* f = std::get_if<LongField>(&field)) {
        out << cfg.**f;
    } else if (const auto* f = std::get_if<DoubleField>(&field)) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.12g", cfg.**f);
        out << buf;
    } else if (const auto* f = std::get_if<StringField>(&field)) {
        out << cfg.**f;
    } else if (const auto* f = std::get_if<SeedField>(&field)) {
        out << cfg.**f;
    }
}

} // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    for (const auto& [name, field] : fields()) {
        if (key != name) continue;
        if (const auto* f = std::get_if<IntField>(&field)) {
            const long v = parse_long(key, value);
            if (v < INT32_MIN || v > INT32_MAX) {
                throw ConfigError("config: out of range for '" + key + "'");
            }
            this->**f = static_cast<int>(v);
        } else if (const auto* f = std::get_if<LongField>(&field)) {
            this->**f = parse_long(key, value);
        } else if (const auto* f = std::get_if<DoubleField>(&field)) {
            this->**f = parse_double(key, value);
        } else if (const auto* f = std::get_if<StringField>(&field)) {
            this->**f = value;
        } else if (const auto* f = std::get_if<SeedField>(&field)) {
            this->**f = parse_seed(key, value);
        }
        return;
    }
    throw ConfigError("config: unknown key '" + key + "'");
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    RunConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: " + path + ":" + std::to_string(line_no) +
                              ": expected key=value");
        }
        cfg.set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    }
    return cfg;
}

void RunConfig::apply_overrides(const std::vector<std::string>& key_value_pairs) {
    for (const std::string& pair : key_value_pairs) {
        const std::size_t eq = pair.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: override must be key=value, got '" + pair + "'");
        }
        set(trim(pair.substr(0, eq)), trim(pair.substr(eq + 1)));
    }
}

std::string RunConfig::resolved_text() const {
    std::ostringstream out;
    for (const auto& [name, field] : fields()) {
        out << name << '=';
        render(out, *this, field);
        out << '\n';
    }
    return out.str();
}

std::uint64_t RunConfig::hash() const { return fnv1a64(resolved_text()); }

SimConfig RunConfig::sim() const {
    SimConfig cfg;
    cfg.n_items = n_items;
    cfg.d_latent = d_latent;
    cfg.theta_c = theta_c;
    cfg.theta_p = theta_p;
    cfg.drift = drift;
    cfg.p_end = p_end;
    cfg.max_session_len = max_session_len;
    cfg.validate();
    return cfg;
}

BehaviorPolicy RunConfig::behavior_policy() const {
    return BehaviorPolicy::from_name(behavior, epsilon);
}

ModelDims RunConfig::model_dims() const {
    ModelDims dims;
    dims.catalog = n_items;
    dims.window_len = window_len;
    dims.d_embed = d_embed;
    dims.d_state = d_state;
    dims.q_hidden = q_hidden;
    dims.ce_hidden = ce_hidden;
    dims.k_heads = k_heads;
    dims.validate();
    return dims;
}

TrainConfig RunConfig::train_config() const {
    TrainConfig cfg;
    cfg.penalty.mode = penalty_mode_from_name(penalty);
    cfg.penalty.lambda = lambda;
    cfg.penalty.gamma = gamma;
    cfg.ablation = ablation_mode_from_name(ablation);
    cfg.steps = steps;
    cfg.batch = batch;
    cfg.sync_period = sync_period;
    cfg.adam.lr = lr;
    cfg.adam.beta1 = beta1;
    cfg.adam.beta2 = beta2;
    cfg.adam.eps = adam_eps;
    cfg.seed = seed;
    cfg.log_every = log_every;
    cfg.validate();
    return cfg;
}

std::vector<int> RunConfig::parsed_k_list() const {
    std::vector<int> ks;
    std::stringstream ss(k_list);
    std::string token;
    while (std::getline(ss, token, ',')) {
        const std::string t = trim(token);
        if (t.empty()) continue;
        const long k = parse_long("k_list", t);
        if (k < 1) throw ConfigError("config: k_list entries must be >= 1");
        ks.push_back(static_cast<int>(k));
    }
    if (ks.empty()) throw ConfigError("config: k_list is empty");
    return ks;
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
    nlohmann::json j;
    char hash_hex[17];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(manifest.config_hash));
    j["config_hash"] = hash_hex;
    j["seed"] = manifest.seed;
    j["input_hash"] = manifest.input_hash;
    j["outputs"] = manifest.outputs;
    j["wall_clock"] = manifest.wall_clock;
    j["code_version"] = manifest.code_version;
    write_text_file(path, j.dump(1, '\t') + "\n");
}

std::string file_hash_hex(const std::string& path) {
    const std::string bytes = read_text_file(path);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

std::string now_utc_iso8601() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace vpq
