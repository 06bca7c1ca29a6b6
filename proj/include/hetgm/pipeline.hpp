#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hetgm/datagen.hpp"
#include "hetgm/evaluation.hpp"
#include "hetgm/model_selection.hpp"
#include "hetgm/score_fit.hpp"

namespace hetgm {

/// Everything an end-to-end run needs. Exactly one data source may be set: a
/// named example, or external file paths. JSON config files mirror these
/// fields with the same snake_case names; CLI flags override one-to-one.
struct RunConfig {
    std::string example;  // "rdpg-gaussian" | "butterfly" | "permutation-laplace"
    std::string data_path;
    std::string edges_path;
    std::string embedding_path;
    std::string truth_path;
    std::string model_path;
    std::string pred_path;

    int n = 400;
    int d = 10;
    int m = 0;  // 0: per-example default
    std::uint64_t seed = 1;
    int replications = 1;
    std::vector<double> lambda_grid;      // empty: 7 log-spaced in [1e-4, 1]
    std::vector<double> delta_grid;       // empty: quantile grid from the fold fields
    std::optional<double> delta_fixed;
    std::optional<double> sigma_x;        // overrides the median heuristic
    std::optional<double> sigma_b;
    std::string embedding_mode;           // "ase" | "given" | "" (per-example default)
    std::optional<int> eval_subsample;    // default: full average up to 1000, then 500
    int fold_count = 5;
    std::string out_dir = "out";
    std::string aggregation = "per-node-mean";
    int threads = 0;  // 0: all hardware threads
    bool similarity_network = false;
    bool resume = false;

    void validate() const;
    int resolved_threads() const;
    int resolved_m() const;
    std::string resolved_embedding_mode() const;
    std::vector<double> resolved_lambda_grid() const;
    std::optional<int> resolved_eval_subsample(int train_size) const;
};

RunConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const RunConfig& config);
RunConfig load_config(const std::string& path);

std::vector<double> default_lambda_grid();

/// Quantile-spaced candidate thresholds covering the off-diagonal entries of
/// the fold fields, from near-complete to near-empty graphs.
std::vector<double> auto_delta_grid(const std::vector<OmegaField>& fields, int points = 30);

/// Per-command drivers. Each writes its outputs plus a manifest into
/// config.out_dir and throws on failure; the CLI maps exceptions to exit
/// codes.
Dataset cmd_simulate(const RunConfig& config);
Eigen::MatrixXd cmd_embed(const RunConfig& config);

struct FitOutcome {
    RepresenterModel model;
    double lambda = 0.0;
    std::string lambda_rule;  // "cv" or "grid-of-one"
    double sigma_x = 0.0;
    double sigma_b = 0.0;
};
FitOutcome cmd_fit(const RunConfig& config);

struct GraphsOutcome {
    OmegaField field;
    EdgeSetCollection edges;
    double delta = 0.0;
    std::string delta_rule;  // "cv", "grid-of-one" or "fixed"
};
GraphsOutcome cmd_graphs(const RunConfig& config);

struct EvaluateOutcome {
    MetricReport per_node_mean;
    MetricReport pooled;
};
EvaluateOutcome cmd_evaluate(const RunConfig& config);

/// simulate -> embed -> fit -> graphs -> evaluate, replicated with derived
/// seeds. A failing stage aborts its replication and the run continues;
/// the return value is 0 only if every replication succeeded.
int cmd_run(const RunConfig& config);

/// Recomputes the checksums of every file listed in a manifest.
bool manifest_valid(const std::string& dir);

}  // namespace hetgm
