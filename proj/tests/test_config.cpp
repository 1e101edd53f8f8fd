#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "vpq/config.hpp"

using namespace vpq;

namespace {

std::string temp_file(const std::string& name, const std::string& content) {
    const std::string path = std::string("/tmp/vpq_config_") + name;
    std::ofstream out(path);
    out << content;
    return path;
}

} // namespace

TEST_CASE("run config defaults") {
    const RunConfig cfg;
    CHECK(cfg.n_items == 200);
    CHECK(cfg.behavior == "epsilon_oracle");
    CHECK(cfg.penalty == "p_mul");
    CHECK(cfg.lambda == 20.0);
    CHECK(cfg.gamma == 0.9);
    CHECK(cfg.k_heads == 5);
    CHECK(cfg.window_len == 10);
    CHECK(cfg.k_list == "5,10,20");
    CHECK(cfg.seed == 7);
}

TEST_CASE("set parses typed values and rejects junk") {
    RunConfig cfg;
    cfg.set("n_items", "50");
    CHECK(cfg.n_items == 50);
    cfg.set("lambda", "2.5");
    CHECK(cfg.lambda == 2.5);
    cfg.set("behavior", "uniform");
    CHECK(cfg.behavior == "uniform");
    cfg.set("steps", "100000");
    CHECK(cfg.steps == 100000);
    cfg.set("seed", "18446744073709551615"); // uint64 max
    CHECK(cfg.seed == 18446744073709551615ull);

    CHECK_THROWS_AS(cfg.set("no_such_key", "1"), ConfigError);
    CHECK_THROWS_AS(cfg.set("n_items", "many"), ConfigError);
    CHECK_THROWS_AS(cfg.set("lambda", ""), ConfigError);
    CHECK_THROWS_AS(cfg.set("steps", "12abc"), ConfigError);
}

TEST_CASE("from_file layers the file over the defaults") {
    const std::string path = temp_file("good.cfg",
                                       "# training tweaks\n"
                                       "\n"
                                       "steps = 500\n"
                                       "lambda=5\n"
                                       "  behavior = popularity  \n");
    const RunConfig cfg = RunConfig::from_file(path);
    CHECK(cfg.steps == 500);
    CHECK(cfg.lambda == 5.0);
    CHECK(cfg.behavior == "popularity");
    CHECK(cfg.n_items == 200); // untouched default
    std::remove(path.c_str());
}

TEST_CASE("from_file errors carry the line number") {
    const std::string path = temp_file("bad.cfg", "steps = 500\nlambda=5\nwat\n");
    CHECK_THROWS_WITH_AS(RunConfig::from_file(path), doctest::Contains(":3:"), ConfigError);
    std::remove(path.c_str());

    const std::string unknown = temp_file("unknown.cfg", "stepz = 500\n");
    CHECK_THROWS_AS(RunConfig::from_file(unknown), ConfigError);
    std::remove(unknown.c_str());

    CHECK_THROWS_AS(RunConfig::from_file("/tmp/vpq_config_missing.cfg"), ConfigError);
}

TEST_CASE("apply_overrides wins over file values") {
    RunConfig cfg;
    cfg.set("steps", "500");
    cfg.apply_overrides({"steps=900", "lambda=1.5"});
    CHECK(cfg.steps == 900);
    CHECK(cfg.lambda == 1.5);
    CHECK_THROWS_AS(cfg.apply_overrides({"no_equals_sign"}), ConfigError);
    CHECK_THROWS_AS(cfg.apply_overrides({"bogus=1"}), ConfigError);
}

TEST_CASE("resolved_text round-trips through set") {
    RunConfig cfg;
    cfg.set("n_items", "37");
    cfg.set("penalty", "p_sub");
    cfg.set("seed", "12345");

    const std::string text = cfg.resolved_text();
    CHECK(text.find("n_items=37") != std::string::npos);
    CHECK(text.find("penalty=p_sub") != std::string::npos);

    // declaration order: n_items is the first key
    CHECK(text.rfind("n_items=", 0) == 0);

    // feed every line back through set -> identical config
    RunConfig replayed;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        const auto eq = line.find('=');
        REQUIRE(eq != std::string::npos);
        replayed.set(line.substr(0, eq), line.substr(eq + 1));
    }
    CHECK(replayed.resolved_text() == text);
    CHECK(replayed.hash() == cfg.hash());
}

TEST_CASE("hash separates configs and ignores nothing") {
    const RunConfig base;
    RunConfig tweaked;
    CHECK(base.hash() == tweaked.hash());
    tweaked.set("drift", "0.11");
    CHECK(base.hash() != tweaked.hash());

    RunConfig seeded;
    seeded.set("seed", "8");
    CHECK(base.hash() != seeded.hash());
}

TEST_CASE("config views map onto the module structs") {
    RunConfig cfg;
    cfg.set("n_items", "64");
    cfg.set("theta_c", "0.2");
    cfg.set("theta_p", "0.8");
    cfg.set("drift", "0.05");
    cfg.set("p_end", "0.1");
    cfg.set("behavior", "epsilon_oracle");
    cfg.set("epsilon", "0.25");
    cfg.set("window_len", "6");
    cfg.set("d_embed", "16");
    cfg.set("k_heads", "4");
    cfg.set("penalty", "p_sub");
    cfg.set("lambda", "3");
    cfg.set("gamma", "0.8");
    cfg.set("ablation", "q_aux");
    cfg.set("steps", "77");
    cfg.set("batch", "16");
    cfg.set("sync_period", "9");
    cfg.set("lr", "0.01");
    cfg.set("log_every", "11");
    cfg.set("seed", "55");
    cfg.set("k_list", "1,3");

    const SimConfig sim = cfg.sim();
    CHECK(sim.n_items == 64);
    CHECK(sim.theta_c == 0.2);
    CHECK(sim.theta_p == 0.8);
    CHECK(sim.drift == 0.05);
    CHECK(sim.p_end == 0.1);

    const BehaviorPolicy policy = cfg.behavior_policy();
    CHECK(policy.kind == PolicyKind::epsilon_oracle);
    CHECK(policy.epsilon == 0.25);

    const ModelDims dims = cfg.model_dims();
    CHECK(dims.catalog == 64);
    CHECK(dims.window_len == 6);
    CHECK(dims.d_embed == 16);
    CHECK(dims.k_heads == 4);

    const TrainConfig train = cfg.train_config();
    CHECK(train.penalty.mode == PenaltyMode::p_sub);
    CHECK(train.penalty.lambda == 3.0);
    CHECK(train.penalty.gamma == 0.8);
    CHECK(train.ablation == AblationMode::q_aux);
    CHECK(train.steps == 77);
    CHECK(train.batch == 16);
    CHECK(train.sync_period == 9);
    CHECK(train.adam.lr == 0.01);
    CHECK(train.log_every == 11);
    CHECK(train.seed == 55);

    CHECK(cfg.parsed_k_list() == std::vector<int>{1, 3});

    RunConfig tolerant;
    tolerant.set("k_list", "5,,10"); // stray commas are skipped
    CHECK(tolerant.parsed_k_list() == std::vector<int>{5, 10});
    RunConfig bad;
    bad.set("k_list", "0,5");
    CHECK_THROWS_AS(bad.parsed_k_list(), ConfigError);
    RunConfig bad2;
    bad2.set("k_list", "5,zero");
    CHECK_THROWS_AS(bad2.parsed_k_list(), ConfigError);
}

TEST_CASE("manifest writes well-formed json") {
    RunManifest manifest;
    manifest.config_hash = 0xDEADBEEFCAFEBABEull;
    manifest.seed = 42;
    manifest.input_hash = "00ff00ff00ff00ff";
    manifest.outputs = {"train_log.csv", "checkpoint.json"};
    manifest.wall_clock = now_utc_iso8601();

    const std::string path = "/tmp/vpq_config_manifest.json";
    write_manifest(path, manifest);

    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text.find("\"config_hash\"") != std::string::npos);
    CHECK(text.find("deadbeefcafebabe") != std::string::npos); // 16 hex digits
    CHECK(text.find("\"seed\"") != std::string::npos);
    CHECK(text.find("\"outputs\"") != std::string::npos);
    CHECK(text.find("train_log.csv") != std::string::npos);
    CHECK(text.find("\"code_version\"") != std::string::npos);
    CHECK(text.find(kVersion) != std::string::npos);
    CHECK(text.find("\"wall_clock\"") != std::string::npos);
    std::remove(path.c_str());
}

TEST_CASE("file_hash_hex matches fnv1a64 of the bytes") {
    const std::string path = temp_file("hash.bin", "foobar");
    const std::string hex = file_hash_hex(path);
    CHECK(hex.size() == 16);
    std::ostringstream expect;
    expect << std::hex << std::setw(16) << std::setfill('0')
           << fnv1a64(reinterpret_cast<const unsigned char*>("foobar"), 6);
    CHECK(hex == expect.str());
    std::remove(path.c_str());

    CHECK_THROWS_AS(file_hash_hex("/tmp/vpq_config_nope.bin"), DataError);
}

TEST_CASE("utc timestamps have the iso shape") {
    const std::string ts = now_utc_iso8601();
    REQUIRE(ts.size() == 20);
    CHECK(ts[4] == '-');
    CHECK(ts[7] == '-');
    CHECK(ts[10] == 'T');
    CHECK(ts[13] == ':');
    CHECK(ts[16] == ':');
    CHECK(ts.back() == 'Z');
    CHECK(ts.substr(0, 2) == "20");
}
