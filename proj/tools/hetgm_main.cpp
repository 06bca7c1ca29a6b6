#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hetgm/pipeline.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    hetgm::RunConfig flags;  // values set by flags; merged over the config file
    CLI::App* sub = nullptr;
};

// Attaches the shared flag set to one subcommand. Each flag maps one-to-one
// onto a RunConfig field; only flags the user actually passed override the
// config file.
void add_common_flags(CLI::App* cmd, hetgm::RunConfig& cfg, std::string& config_path) {
    cmd->add_option("--config", config_path, "JSON config file (snake_case RunConfig fields)");
    cmd->add_option("--example", cfg.example, "rdpg-gaussian | butterfly | permutation-laplace");
    cmd->add_option("--data", cfg.data_path, "observations CSV (n rows, d columns)");
    cmd->add_option("--edges", cfg.edges_path, "network edge list file");
    cmd->add_option("--embedding", cfg.embedding_path, "embedding CSV");
    cmd->add_option("--truth", cfg.truth_path, "ground-truth edge sets (JSON lines)");
    cmd->add_option("--model", cfg.model_path, "fitted model file");
    cmd->add_option("--pred", cfg.pred_path, "predicted edge sets (JSON lines)");
    cmd->add_option("-n,--n", cfg.n, "number of observations");
    cmd->add_option("-d,--d", cfg.d, "number of variables");
    cmd->add_option("-m,--m", cfg.m, "embedding dimension (0: per-example default)");
    cmd->add_option("--seed", cfg.seed, "master seed");
    cmd->add_option("--replications", cfg.replications, "replication count");
    cmd->add_option("--lambda-grid", cfg.lambda_grid, "ridge penalty grid")->delimiter(',');
    cmd->add_option("--delta-grid", cfg.delta_grid, "threshold grid")->delimiter(',');
    cmd->add_option("--delta", [&cfg](const std::vector<std::string>& vals) {
        if (vals.empty()) return false;
        if (vals.back() == "inf") {
            cfg.delta_fixed = std::numeric_limits<double>::infinity();
        } else {
            cfg.delta_fixed = std::stod(vals.back());
        }
        return true;
    }, "fixed threshold (accepts 'inf')");
    cmd->add_option("--sigma-x", [&cfg](const std::vector<std::string>& vals) {
        cfg.sigma_x = std::stod(vals.back());
        return true;
    }, "data kernel inverse bandwidth (default: median heuristic)");
    cmd->add_option("--sigma-b", [&cfg](const std::vector<std::string>& vals) {
        cfg.sigma_b = std::stod(vals.back());
        return true;
    }, "embedding kernel inverse bandwidth (default: median heuristic)");
    cmd->add_option("--embedding-mode", cfg.embedding_mode, "ase | given");
    cmd->add_option("--eval-subsample", [&cfg](const std::vector<std::string>& vals) {
        cfg.eval_subsample = std::stoi(vals.back());
        return true;
    }, "evaluation points per signal matrix");
    cmd->add_option("--folds", cfg.fold_count, "cross-validation folds");
    cmd->add_option("--out-dir", cfg.out_dir, "output directory");
    cmd->add_option("--aggregation", cfg.aggregation, "per-node-mean | pooled");
    cmd->add_option("--threads", cfg.threads, "worker threads (0 = all cores)");
    cmd->add_flag("--similarity-network", cfg.similarity_network,
                  "permutation example: connect similar permutations instead of distant ones");
    cmd->add_flag("--resume", cfg.resume, "reuse completed replications (checksum-verified)");
}

hetgm::RunConfig merge(const CLI::App* cmd, const hetgm::RunConfig& flags,
                       const std::string& config_path) {
    hetgm::RunConfig cfg = config_path.empty() ? hetgm::RunConfig{} : hetgm::load_config(config_path);
    const auto passed = [&](const std::string& name) {
        const CLI::Option* opt = cmd->get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
    };
    if (passed("--example")) cfg.example = flags.example;
    if (passed("--data")) cfg.data_path = flags.data_path;
    if (passed("--edges")) cfg.edges_path = flags.edges_path;
    if (passed("--embedding")) cfg.embedding_path = flags.embedding_path;
    if (passed("--truth")) cfg.truth_path = flags.truth_path;
    if (passed("--model")) cfg.model_path = flags.model_path;
    if (passed("--pred")) cfg.pred_path = flags.pred_path;
    if (passed("--n")) cfg.n = flags.n;
    if (passed("--d")) cfg.d = flags.d;
    if (passed("--m")) cfg.m = flags.m;
    if (passed("--seed")) cfg.seed = flags.seed;
    if (passed("--replications")) cfg.replications = flags.replications;
    if (passed("--lambda-grid")) cfg.lambda_grid = flags.lambda_grid;
    if (passed("--delta-grid")) cfg.delta_grid = flags.delta_grid;
    if (passed("--delta")) cfg.delta_fixed = flags.delta_fixed;
    if (passed("--sigma-x")) cfg.sigma_x = flags.sigma_x;
    if (passed("--sigma-b")) cfg.sigma_b = flags.sigma_b;
    if (passed("--embedding-mode")) cfg.embedding_mode = flags.embedding_mode;
    if (passed("--eval-subsample")) cfg.eval_subsample = flags.eval_subsample;
    if (passed("--folds")) cfg.fold_count = flags.fold_count;
    if (passed("--out-dir")) cfg.out_dir = flags.out_dir;
    if (passed("--aggregation")) cfg.aggregation = flags.aggregation;
    if (passed("--threads")) cfg.threads = flags.threads;
    if (passed("--similarity-network")) cfg.similarity_network = flags.similarity_network;
    if (passed("--resume")) cfg.resume = flags.resume;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Node-wise conditional-independence graphs on network-linked data"};
    app.require_subcommand(1);

    struct SubState {
        hetgm::RunConfig flags;
        std::string config_path;
        CLI::App* cmd = nullptr;
    };
    std::vector<std::string> names = {"simulate", "embed", "fit", "graphs", "evaluate", "run"};
    std::vector<std::string> descriptions = {
        "Generate one simulated dataset and export it",
        "Adjacency spectral embedding of an edge list",
        "Tune lambda by cross-validation and fit the score model",
        "Signal matrices, threshold selection and edge sets from a fitted model",
        "Confusion metrics of predicted edge sets against a ground truth",
        "Full replicated experiment: simulate, embed, fit, graphs, evaluate"};
    std::vector<SubState> subs(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
        subs[i].cmd = app.add_subcommand(names[i], descriptions[i]);
        add_common_flags(subs[i].cmd, subs[i].flags, subs[i].config_path);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        for (std::size_t i = 0; i < subs.size(); ++i) {
            if (!subs[i].cmd->parsed()) continue;
            const hetgm::RunConfig cfg = merge(subs[i].cmd, subs[i].flags, subs[i].config_path);
            if (names[i] == "simulate") {
                cfg.validate();
                hetgm::cmd_simulate(cfg);
            } else if (names[i] == "embed") {
                hetgm::cmd_embed(cfg);
            } else if (names[i] == "fit") {
                hetgm::cmd_fit(cfg);
            } else if (names[i] == "graphs") {
                hetgm::cmd_graphs(cfg);
            } else if (names[i] == "evaluate") {
                hetgm::cmd_evaluate(cfg);
            } else {
                return hetgm::cmd_run(cfg);
            }
        }
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
