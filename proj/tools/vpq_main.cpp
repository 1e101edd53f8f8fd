#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vpq/config.hpp"

namespace fs = std::filesystem;
using namespace vpq;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool need_out = true) {
    cmd->add_option("--config", args.config_path, "key=value config file");
    auto* out = cmd->add_option("--out", args.out_dir, "output directory");
    if (need_out) out->required();
    cmd->add_option("--set", args.overrides, "config override key=value (repeatable)");
    cmd->add_option("--seed", args.seed, "global seed (wins over config and --set)")
        ->each([&args](const std::string&) { args.seed_given = true; });
}

RunConfig resolve_config(const CommonArgs& args) {
    RunConfig cfg = args.config_path.empty() ? RunConfig{} : RunConfig::from_file(args.config_path);
    cfg.apply_overrides(args.overrides);
    if (args.seed_given) cfg.seed = args.seed;
    return cfg;
}

fs::path prepare_out(const std::string& dir) {
    fs::path out(dir);
    fs::create_directories(out);
    return out;
}

void finish_run(const fs::path& out, const RunConfig& cfg, RunManifest manifest) {
    write_text_file((out / "config.resolved").string(), cfg.resolved_text());
    manifest.config_hash = cfg.hash();
    manifest.seed = cfg.seed;
    manifest.wall_clock = now_utc_iso8601();
    manifest.outputs.push_back((out / "config.resolved").string());
    write_manifest((out / "manifest.json").string(), manifest);
}

// ----- gen-data ------------------------------------------------------------

int cmd_gen_data(const CommonArgs& args, const std::string& from_csv) {
    const RunConfig cfg = resolve_config(args);
    const fs::path out = prepare_out(args.out_dir);
    RunManifest manifest;

    TransitionStore store(cfg.window_len, cfg.n_items);
    if (from_csv.empty()) {
        const SimWorld world = SimWorld::create(cfg.sim(), cfg.seed);
        const auto sessions =
            generate_dataset(world, cfg.behavior_policy(), cfg.n_sessions,
                             mix64(cfg.seed, streams::kData));
        write_sessions_csv((out / "sessions.csv").string(), sessions);
        store = sessions_to_transitions(sessions, cfg.window_len, cfg.n_items);
        manifest.outputs.push_back((out / "sessions.csv").string());
    } else {
        const auto raw = load_sessions_csv(from_csv);
        const IdVocabulary vocab = IdVocabulary::build(raw);
        const auto sessions = apply_vocabulary(raw, vocab);
        vocab.save((out / "vocab.csv").string());
        write_sessions_csv((out / "sessions.csv").string(), sessions);
        store = sessions_to_transitions(sessions, cfg.window_len, vocab.size());
        manifest.input_hash = file_hash_hex(from_csv);
        manifest.outputs.push_back((out / "vocab.csv").string());
        manifest.outputs.push_back((out / "sessions.csv").string());
    }
    store.seed = cfg.seed;
    store.config_hash = cfg.hash();
    save_store(store, (out / "transitions.bin").string());
    manifest.outputs.push_back((out / "transitions.bin").string());
    std::printf("gen-data: %zu transitions over catalog %d -> %s\n", store.size(),
                store.catalog(), out.string().c_str());
    finish_run(out, cfg, std::move(manifest));
    return 0;
}

// ----- train ---------------------------------------------------------------

int cmd_train(const CommonArgs& args, const std::string& data_path) {
    RunConfig cfg = resolve_config(args);
    const fs::path out = prepare_out(args.out_dir);

    const TransitionStore store = load_store(data_path);
    // The dataset fixes the observation space; the config supplies the rest.
    cfg.n_items = store.catalog();
    cfg.window_len = store.window_len();

    Model model = Model::init(cfg.model_dims(), cfg.seed);
    OptState opt = OptState::init(model);
    std::vector<StepLog> log;
    try {
        log = train(model, opt, store, cfg.train_config());
    } catch (const DivergenceError&) {
        // Leave a diagnostic snapshot of the parameters that diverged.
        save_model(model, (out / "checkpoint_diverged.json").string());
        throw;
    }

    save_model(model, (out / "checkpoint.json").string());
    write_text_file((out / "train_log.csv").string(), train_log_csv(log));
    if (!log.empty()) {
        std::printf("train: %ld steps, td_loss %.6g, ce_loss %.6g, mean_w %.4f\n",
                    log.back().step, log.back().td_loss, log.back().ce_loss,
                    log.back().mean_w);
    } else {
        std::printf("train: 0 steps, checkpoint equals initialization\n");
    }

    RunManifest manifest;
    manifest.input_hash = file_hash_hex(data_path);
    manifest.outputs.push_back((out / "checkpoint.json").string());
    manifest.outputs.push_back((out / "train_log.csv").string());
    finish_run(out, cfg, std::move(manifest));
    return 0;
}

// ----- eval ----------------------------------------------------------------

int cmd_eval(const CommonArgs& args, const std::string& checkpoint_path,
             const std::string& data_path, bool with_sim) {
    RunConfig cfg = resolve_config(args);
    const fs::path out = prepare_out(args.out_dir);

    const Model model = load_model(checkpoint_path);
    cfg.n_items = model.dims.catalog;
    cfg.window_len = model.dims.window_len;
    const AblationMode ablation = ablation_mode_from_name(cfg.ablation);

    RunManifest manifest;
    if (!data_path.empty()) {
        const TransitionStore store = load_store(data_path);
        std::vector<RankedCase> cases;
        const MetricsReport report =
            evaluate_model(model, store, cfg.parsed_k_list(), ablation, &cases);
        write_text_file((out / "metrics.csv").string(), report.csv());
        write_text_file((out / "rankings.jsonl").string(), rankings_jsonl(cases));
        std::fputs(report.table().c_str(), stdout);
        manifest.input_hash = file_hash_hex(data_path);
        manifest.outputs.push_back((out / "metrics.csv").string());
        manifest.outputs.push_back((out / "rankings.jsonl").string());
    }
    if (with_sim) {
        const SimWorld world = SimWorld::create(cfg.sim(), cfg.seed);
        const ReturnEstimate ret =
            sim_true_return(world, greedy_policy(model, ablation), model.dims.window_len,
                            cfg.eval_episodes, cfg.gamma, mix64(cfg.seed, streams::kEval));
        char buf[128];
        std::snprintf(buf, sizeof(buf), "mean,se,episodes\n%.12g,%.12g,%d\n", ret.mean,
                      ret.se, ret.episodes);
        write_text_file((out / "true_return.csv").string(), buf);
        std::printf("true return: %.4f +- %.4f (%d episodes)\n", ret.mean, ret.se,
                    ret.episodes);
        manifest.outputs.push_back((out / "true_return.csv").string());
    }
    if (data_path.empty() && !with_sim) {
        throw ConfigError("eval: need --data, --sim, or both");
    }
    finish_run(out, cfg, std::move(manifest));
    return 0;
}

// ----- analyze -------------------------------------------------------------

int cmd_analyze(const CommonArgs& args, int trials) {
    const RunConfig cfg = resolve_config(args);
    const fs::path out = prepare_out(args.out_dir);
    RunManifest manifest;

    const std::vector<int> ns = {1, 10, 100, 1000};
    const std::vector<double> lambdas = {0.0, 5.0, 20.0, 100.0};
    const auto rows = penalty_analysis(ns, 0.0, 1.0, lambdas, trials,
                                       mix64(cfg.seed, streams::kEval));
    write_text_file((out / "penalty_analysis.csv").string(), penalty_analysis_csv(rows));

    // Absorbed-discount table over a W grid; gamma = 0.99 covers the quoted
    // anchor rows W = 0.9 -> ~149.98 and W = 0.5 -> ~3.88.
    std::ostringstream ad;
    ad << "gamma,w,absorbed\n";
    for (double w : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "0.99,%.2g,%.12g\n", w,
                      absorbed_discount(0.99, w));
        ad << buf;
    }
    write_text_file((out / "absorbed_discount.csv").string(), ad.str());

    const PenaltyToyTable toy =
        penalty_toy(50, 1.0, 1.0, {0.0, 1.0, 5.0, 20.0}, mix64(cfg.seed, streams::kData));
    write_text_file((out / "penalty_toy.csv").string(), penalty_toy_csv(toy));

    std::printf("analyze: wrote penalty_analysis.csv, absorbed_discount.csv, "
                "penalty_toy.csv -> %s\n",
                out.string().c_str());
    manifest.outputs.push_back((out / "penalty_analysis.csv").string());
    manifest.outputs.push_back((out / "absorbed_discount.csv").string());
    manifest.outputs.push_back((out / "penalty_toy.csv").string());
    finish_run(out, cfg, std::move(manifest));
    return 0;
}

// ----- sweep ---------------------------------------------------------------

int cmd_sweep(const CommonArgs& args, const std::string& data_path,
              std::vector<double> lambdas, std::vector<std::uint64_t> seeds) {
    RunConfig cfg = resolve_config(args);
    const fs::path out = prepare_out(args.out_dir);
    if (lambdas.empty()) throw ConfigError("sweep: lambda list is empty");
    if (seeds.empty()) seeds = {cfg.seed};

    std::vector<double> unique_lambdas;
    std::set<double> seen;
    for (double l : lambdas) {
        if (!seen.insert(l).second) {
            std::fprintf(stderr, "sweep: duplicate lambda %g dropped\n", l);
            continue;
        }
        unique_lambdas.push_back(l);
    }

    const TransitionStore store = load_store(data_path);
    cfg.n_items = store.catalog();
    cfg.window_len = store.window_len();
    const std::vector<int> k_list = cfg.parsed_k_list();
    const int k_top = *std::max_element(k_list.begin(), k_list.end());

    struct Cell {
        double lambda = 0.0;
        std::uint64_t seed = 0;
        bool ok = false;
        std::string error;
        double hr = 0.0, ndcg = 0.0, td_loss = 0.0, ce_loss = 0.0;
    };
    std::vector<Cell> cells;

    for (double lambda : unique_lambdas) {
        for (std::uint64_t seed : seeds) {
            Cell cell;
            cell.lambda = lambda;
            cell.seed = seed;
            try {
                RunConfig run_cfg = cfg;
                run_cfg.lambda = lambda;
                run_cfg.seed = seed;
                Model model = Model::init(run_cfg.model_dims(), seed);
                OptState opt = OptState::init(model);
                const auto log = train(model, opt, store, run_cfg.train_config());
                const AblationMode ablation = ablation_mode_from_name(run_cfg.ablation);
                const MetricsReport report = evaluate_model(model, store, k_list, ablation);
                const auto purchase_key = std::pair<EventType, int>{EventType::purchase, k_top};
                const auto click_key = std::pair<EventType, int>{EventType::click, k_top};
                const auto& key = report.hr.count(purchase_key) ? purchase_key : click_key;
                cell.hr = report.hr.at(key);
                cell.ndcg = report.ndcg.at(key);
                if (!log.empty()) {
                    cell.td_loss = log.back().td_loss;
                    cell.ce_loss = log.back().ce_loss;
                }
                cell.ok = true;
            } catch (const std::exception& e) {
                cell.error = e.what();
                std::fprintf(stderr, "sweep: lambda=%g seed=%llu failed: %s\n", lambda,
                             static_cast<unsigned long long>(seed), e.what());
            }
            cells.push_back(std::move(cell));
        }
    }

    std::ostringstream cell_csv;
    cell_csv << "lambda,seed,status,hr,ndcg,td_loss,ce_loss\n";
    for (const Cell& c : cells) {
        char buf[160];
        if (c.ok) {
            std::snprintf(buf, sizeof(buf), "%g,%llu,ok,%.6f,%.6f,%.12g,%.12g\n", c.lambda,
                          static_cast<unsigned long long>(c.seed), c.hr, c.ndcg, c.td_loss,
                          c.ce_loss);
        } else {
            std::snprintf(buf, sizeof(buf), "%g,%llu,failed,,,,\n", c.lambda,
                          static_cast<unsigned long long>(c.seed));
        }
        cell_csv << buf;
    }
    write_text_file((out / "sweep_cells.csv").string(), cell_csv.str());

    std::ostringstream summary;
    summary << "lambda,n_ok,hr_mean,hr_std,ndcg_mean,ndcg_std\n";
    for (double lambda : unique_lambdas) {
        int n = 0;
        double hr_sum = 0, hr_sq = 0, nd_sum = 0, nd_sq = 0;
        for (const Cell& c : cells) {
            if (c.lambda != lambda || !c.ok) continue;
            ++n;
            hr_sum += c.hr;
            hr_sq += c.hr * c.hr;
            nd_sum += c.ndcg;
            nd_sq += c.ndcg * c.ndcg;
        }
        char buf[160];
        if (n > 0) {
            const double hr_mean = hr_sum / n, nd_mean = nd_sum / n;
            const double hr_std =
                n > 1 ? std::sqrt(std::max(0.0, (hr_sq - hr_sum * hr_sum / n) / (n - 1))) : 0.0;
            const double nd_std =
                n > 1 ? std::sqrt(std::max(0.0, (nd_sq - nd_sum * nd_sum / n) / (n - 1))) : 0.0;
            std::snprintf(buf, sizeof(buf), "%g,%d,%.6f,%.6f,%.6f,%.6f\n", lambda, n,
                          hr_mean, hr_std, nd_mean, nd_std);
        } else {
            std::snprintf(buf, sizeof(buf), "%g,0,,,,\n", lambda);
        }
        summary << buf;
    }
    write_text_file((out / "sweep_summary.csv").string(), summary.str());
    std::printf("sweep: %zu cells -> %s\n", cells.size(), out.string().c_str());

    RunManifest manifest;
    manifest.input_hash = file_hash_hex(data_path);
    manifest.outputs.push_back((out / "sweep_cells.csv").string());
    manifest.outputs.push_back((out / "sweep_summary.csv").string());
    finish_run(out, cfg, std::move(manifest));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Offline-RL laboratory for value-penalized Q-learning on session data"};
    app.require_subcommand(1);

    CommonArgs gen_args, train_args, eval_args, analyze_args, sweep_args;
    std::string from_csv, data_path, checkpoint_path, eval_data;
    bool with_sim = false;
    int analyze_trials = 20000;
    std::vector<double> sweep_lambdas;
    std::vector<std::uint64_t> sweep_seeds;

    auto* gen = app.add_subcommand("gen-data", "simulate sessions or ingest a CSV export");
    add_common(gen, gen_args);
    gen->add_option("--from-csv", from_csv,
                    "ingest this session CSV instead of simulating");

    auto* train_cmd = app.add_subcommand("train", "train on a transition store");
    add_common(train_cmd, train_args);
    train_cmd->add_option("--data", data_path, "transition store path")->required();

    auto* eval_cmd = app.add_subcommand("eval", "ranking metrics and/or true return");
    add_common(eval_cmd, eval_args);
    eval_cmd->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
    eval_cmd->add_option("--data", eval_data, "transition store for ranking metrics");
    eval_cmd->add_flag("--sim", with_sim, "roll out the greedy policy in the simulator");

    auto* analyze = app.add_subcommand("analyze", "closed-form penalty analysis tables");
    add_common(analyze, analyze_args);
    analyze->add_option("--trials", analyze_trials, "Monte-Carlo trials per n");

    auto* sweep = app.add_subcommand("sweep", "train/eval grid over lambda x seed");
    add_common(sweep, sweep_args);
    sweep->add_option("--data", data_path, "transition store path")->required();
    sweep->add_option("--lambdas", sweep_lambdas, "lambda values")->required();
    sweep->add_option("--seeds", sweep_seeds, "seeds (default: config seed)");

    try {
        app.parse(argc, argv);
        if (gen->parsed()) return cmd_gen_data(gen_args, from_csv);
        if (train_cmd->parsed()) return cmd_train(train_args, data_path);
        if (eval_cmd->parsed()) return cmd_eval(eval_args, checkpoint_path, eval_data, with_sim);
        if (analyze->parsed()) return cmd_analyze(analyze_args, analyze_trials);
        if (sweep->parsed()) return cmd_sweep(sweep_args, data_path, sweep_lambdas, sweep_seeds);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const ContractError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const DivergenceError& e) {
        std::fprintf(stderr, "training diverged: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
