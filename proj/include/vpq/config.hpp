#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "vpq/simenv.hpp"
#include "vpq/trainer.hpp"

namespace vpq {

constexpr const char* kVersion = "0.1.0";

// Every tunable of every command in one flat key=value document. Files use
// one `key=value` per line ('#' comments and blank lines allowed); unknown
// keys are rejected, and flag overrides replay through the same setter.
struct RunConfig {
    // simulator / dataset
    int n_items = 200;
    int d_latent = 8;
    double theta_c = 0.3;
    double theta_p = 0.75;
    double drift = 0.1;
    double p_end = 0.05;
    int max_session_len = 100;
    std::string behavior = "epsilon_oracle";
    double epsilon = 0.5;
    int n_sessions = 2000;
    // model
    int window_len = 10;
    int d_embed = 32;
    int d_state = 32;
    int q_hidden = 64;
    int ce_hidden = 64;
    int k_heads = 5;
    // training
    std::string penalty = "p_mul";
    double lambda = 20.0;
    double gamma = 0.9;
    std::string ablation = "q_critic";
    long steps = 20000;
    int batch = 64;
    int sync_period = 500;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    int log_every = 100;
    // evaluation
    std::string k_list = "5,10,20";
    int eval_episodes = 400;
    // global
    std::uint64_t seed = 7;

    static RunConfig from_file(const std::string& path); // defaults + file
    void set(const std::string& key, const std::string& value); // ConfigError on unknown key
    void apply_overrides(const std::vector<std::string>& key_value_pairs);

    // Full key=value rendering in declaration order; identical configs render
    // identical text, so the hash doubles as the run identity.
    std::string resolved_text() const;
    std::uint64_t hash() const;

    // Views for the modules.
    SimConfig sim() const;
    BehaviorPolicy behavior_policy() const;
    ModelDims model_dims() const;
    TrainConfig train_config() const;
    std::vector<int> parsed_k_list() const;
};

// Sidecar record of what a run did. wall_clock is the only field that varies
// between identical runs.
struct RunManifest {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::string input_hash = "-"; // FNV-1a64 of the input dataset, hex
    std::vector<std::string> outputs;
    std::string wall_clock;
    std::string code_version = kVersion;
};

// Atomic JSON write next to the run outputs.
void write_manifest(const std::string& path, const RunManifest& manifest);

// FNV-1a64 of a file's bytes, rendered as 16 hex digits.
std::string file_hash_hex(const std::string& path);

std::string now_utc_iso8601();

} // namespace vpq
