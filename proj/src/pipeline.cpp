#include "hetgm/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <stdexcept>

#include "hetgm/embedding.hpp"
#include "hetgm/errors.hpp"
#include "hetgm/io.hpp"
#include "hetgm/parallel.hpp"

namespace fs = std::filesystem;

namespace hetgm {

namespace {

constexpr const char* kVersion = "0.1.0";

std::mutex log_mutex;

class StageTimer {
  public:
    explicit StageTimer(std::string name) : name_(std::move(name)), start_(clock::now()) {}

    double finish(const std::string& detail = "") {
        const double ms =
            std::chrono::duration<double, std::milli>(clock::now() - start_).count();
        std::lock_guard<std::mutex> lock(log_mutex);
        std::fprintf(stderr, "[%s] %s%s%.1f ms\n", name_.c_str(), detail.c_str(),
                     detail.empty() ? "" : " ", ms);
        return ms;
    }

  private:
    using clock = std::chrono::steady_clock;
    std::string name_;
    clock::time_point start_;
};

/// Accumulates one command's manifest block and merges it into
/// <dir>/manifest.json on finish. Every listed file is checksummed on write
/// and re-verified before the manifest lands.
class ManifestWriter {
  public:
    ManifestWriter(std::string dir, std::string command, const RunConfig& config)
        : dir_(std::move(dir)) {
        block_["command"] = std::move(command);
        block_["version"] = kVersion;
        block_["config"] = config_to_json(config);
        block_["stages"] = nlohmann::json::array();
        block_["selections"] = nlohmann::json::array();
        block_["files"] = nlohmann::json::array();
    }

    void stage(const std::string& name, double ms) {
        std::lock_guard<std::mutex> lock(mutex_);
        block_["stages"].push_back({{"name", name}, {"ms", ms}});
    }

    void file(const std::string& rel_path) {
        const fs::path full = fs::path(dir_) / rel_path;
        nlohmann::json entry;
        entry["path"] = rel_path;
        entry["checksum"] = file_checksum(full.string());
        entry["bytes"] = static_cast<std::int64_t>(fs::file_size(full));
        std::lock_guard<std::mutex> lock(mutex_);
        block_["files"].push_back(std::move(entry));
    }

    void selection(const nlohmann::json& sel) {
        std::lock_guard<std::mutex> lock(mutex_);
        block_["selections"].push_back(sel);
    }

    void note(const std::string& key, const nlohmann::json& value) {
        std::lock_guard<std::mutex> lock(mutex_);
        block_[key] = value;
    }

    void finish() {
        nlohmann::json doc;
        const fs::path manifest_path = fs::path(dir_) / "manifest.json";
        if (fs::exists(manifest_path)) {
            std::ifstream in(manifest_path);
            in >> doc;
        }
        if (!doc.contains("commands")) {
            doc = {{"version", kVersion}, {"commands", nlohmann::json::array()}};
        }
        // one block per command name: a rerun supersedes its previous record
        auto& commands = doc["commands"];
        for (auto it = commands.begin(); it != commands.end();) {
            if ((*it)["command"] == block_["command"]) {
                it = commands.erase(it);
            } else {
                ++it;
            }
        }
        commands.push_back(block_);
        atomic_write(manifest_path.string(), [&](std::ostream& out) { out << doc.dump(2) << '\n'; });
        if (!manifest_valid(dir_)) {
            throw std::runtime_error("manifest validation failed in " + dir_);
        }
    }

  private:
    std::string dir_;
    nlohmann::json block_;
    std::mutex mutex_;
};

std::string join(const std::string& dir, const std::string& rel) {
    return (fs::path(dir) / rel).string();
}

void require(bool ok, const std::string& message) {
    if (!ok) throw std::invalid_argument(message);
}

}  // namespace

void RunConfig::validate() const {
    const bool has_example = !example.empty();
    const bool has_external = !data_path.empty();
    require(has_example != has_external,
            "config: exactly one of {example, data_path} must be set");
    if (has_example) {
        require(example == "rdpg-gaussian" || example == "butterfly" ||
                    example == "permutation-laplace",
                "config: unknown example '" + example + "'");
    }
    require(replications >= 1, "config: replications must be >= 1");
    require(n >= 1 && d >= 1 && m >= 0, "config: n, d must be positive");
    require(fold_count >= 2, "config: fold_count must be >= 2");
    for (double l : lambda_grid) {
        require(l > 0.0 && std::isfinite(l), "config: lambda grid values must be positive");
    }
    for (double dl : delta_grid) {
        require(dl >= 0.0 && !std::isnan(dl), "config: delta grid values must be nonnegative");
    }
    require(aggregation == "per-node-mean" || aggregation == "pooled",
            "config: aggregation must be per-node-mean or pooled");
    if (!embedding_mode.empty()) {
        require(embedding_mode == "ase" || embedding_mode == "given",
                "config: embedding_mode must be ase or given");
    }
    require(threads >= 0, "config: threads must be >= 0");
    if (has_external) {
        require(replications == 1, "config: external data runs use a single replication");
    }
}

int RunConfig::resolved_threads() const { return threads == 0 ? hardware_threads() : threads; }

int RunConfig::resolved_m() const {
    if (m > 0) return m;
    // The Gaussian design's mean field spans the five leading eigenvectors of
    // the network, so the spectral embedding must cover them.
    if (example == "rdpg-gaussian") return 5;
    if (example == "butterfly") return 1;
    if (example == "permutation-laplace") return 3;
    throw std::invalid_argument("config: m is required for external data");
}

std::string RunConfig::resolved_embedding_mode() const {
    if (!embedding_mode.empty()) return embedding_mode;
    if (example == "butterfly") return "given";
    if (example.empty() && !embedding_path.empty()) return "given";
    return "ase";
}

std::vector<double> RunConfig::resolved_lambda_grid() const {
    return lambda_grid.empty() ? default_lambda_grid() : lambda_grid;
}

std::optional<int> RunConfig::resolved_eval_subsample(int train_size) const {
    if (eval_subsample) return eval_subsample;
    if (train_size <= 1000) return std::nullopt;
    return 500;
}

std::vector<double> default_lambda_grid() {
    std::vector<double> grid;
    const int points = 7;
    for (int i = 0; i < points; ++i) {
        const double t = static_cast<double>(i) / (points - 1);
        grid.push_back(std::pow(10.0, -4.0 + 4.0 * t));
    }
    return grid;
}

std::vector<double> auto_delta_grid(const std::vector<OmegaField>& fields, int points) {
    std::vector<double> entries;
    for (const auto& f : fields) {
        for (const auto& m : f.matrices) {
            for (int j = 0; j < f.dim; ++j) {
                for (int l = j + 1; l < f.dim; ++l) {
                    if (m(j, l) > 0.0) entries.push_back(m(j, l));
                }
            }
        }
    }
    if (entries.empty()) {
        throw SelectionError("auto_delta_grid: no positive off-diagonal entries");
    }
    std::sort(entries.begin(), entries.end());
    const double lo = entries[static_cast<std::size_t>(0.02 * double(entries.size() - 1))];
    const double hi = entries.back();
    std::vector<double> grid;
    if (!(hi > lo)) {
        grid.push_back(hi);
        return grid;
    }
    for (int i = 0; i < points; ++i) {
        const double t = static_cast<double>(i) / (points - 1);
        grid.push_back(std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo))));
    }
    grid.back() = hi;  // guard against rounding past the max entry
    return grid;
}

namespace {

nlohmann::json optional_to_json(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json();
}

nlohmann::json optional_int_to_json(const std::optional<int>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json();
}

}  // namespace

nlohmann::json config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["example"] = c.example;
    j["data_path"] = c.data_path;
    j["edges_path"] = c.edges_path;
    j["embedding_path"] = c.embedding_path;
    j["truth_path"] = c.truth_path;
    j["model_path"] = c.model_path;
    j["pred_path"] = c.pred_path;
    j["n"] = c.n;
    j["d"] = c.d;
    j["m"] = c.m;
    j["seed"] = c.seed;
    j["replications"] = c.replications;
    j["lambda_grid"] = c.lambda_grid;
    j["delta_grid"] = c.delta_grid;
    j["delta_fixed"] = optional_to_json(c.delta_fixed);
    j["sigma_x"] = optional_to_json(c.sigma_x);
    j["sigma_b"] = optional_to_json(c.sigma_b);
    j["embedding_mode"] = c.embedding_mode;
    j["eval_subsample"] = optional_int_to_json(c.eval_subsample);
    j["fold_count"] = c.fold_count;
    j["out_dir"] = c.out_dir;
    j["aggregation"] = c.aggregation;
    j["threads"] = c.threads;
    j["similarity_network"] = c.similarity_network;
    j["resume"] = c.resume;
    return j;
}

RunConfig config_from_json(const nlohmann::json& doc) {
    RunConfig c;
    for (const auto& [key, value] : doc.items()) {
        if (value.is_null()) continue;
        if (key == "example") c.example = value.get<std::string>();
        else if (key == "data_path") c.data_path = value.get<std::string>();
        else if (key == "edges_path") c.edges_path = value.get<std::string>();
        else if (key == "embedding_path") c.embedding_path = value.get<std::string>();
        else if (key == "truth_path") c.truth_path = value.get<std::string>();
        else if (key == "model_path") c.model_path = value.get<std::string>();
        else if (key == "pred_path") c.pred_path = value.get<std::string>();
        else if (key == "n") c.n = value.get<int>();
        else if (key == "d") c.d = value.get<int>();
        else if (key == "m") c.m = value.get<int>();
        else if (key == "seed") c.seed = value.get<std::uint64_t>();
        else if (key == "replications") c.replications = value.get<int>();
        else if (key == "lambda_grid") c.lambda_grid = value.get<std::vector<double>>();
        else if (key == "delta_grid") c.delta_grid = value.get<std::vector<double>>();
        else if (key == "delta_fixed") c.delta_fixed = value.get<double>();
        else if (key == "sigma_x") c.sigma_x = value.get<double>();
        else if (key == "sigma_b") c.sigma_b = value.get<double>();
        else if (key == "embedding_mode") c.embedding_mode = value.get<std::string>();
        else if (key == "eval_subsample") c.eval_subsample = value.get<int>();
        else if (key == "fold_count") c.fold_count = value.get<int>();
        else if (key == "out_dir") c.out_dir = value.get<std::string>();
        else if (key == "aggregation") c.aggregation = value.get<std::string>();
        else if (key == "threads") c.threads = value.get<int>();
        else if (key == "similarity_network") c.similarity_network = value.get<bool>();
        else if (key == "resume") c.resume = value.get<bool>();
        else throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("load_config: cannot open " + path);
    nlohmann::json doc;
    in >> doc;
    return config_from_json(doc);
}

namespace {

Dataset generate_dataset(const RunConfig& config, std::uint64_t seed) {
    if (config.example == "rdpg-gaussian") return gen_example1(config.n, config.d, seed);
    if (config.example == "butterfly") return gen_example2(config.n, config.d, seed);
    if (config.example == "permutation-laplace") {
        return gen_example3(config.n, config.d, seed, config.similarity_network);
    }
    throw std::invalid_argument("unknown example '" + config.example + "'");
}

void write_dataset(const Dataset& ds, const std::string& dir, ManifestWriter& manifest) {
    write_matrix_csv(ds.x, join(dir, "X.csv"));
    atomic_write(join(dir, "A.edges"), [&](std::ostream& out) {
        const auto n = ds.adjacency.rows();
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i + 1; j < n; ++j) {
                if (ds.adjacency(i, j) != 0.0) out << i << ' ' << j << '\n';
            }
        }
    });
    write_matrix_csv(ds.b_true, join(dir, "B_true.csv"));
    write_edges_jsonl(ds.truth, join(dir, "truth.jsonl"));
    nlohmann::json meta;
    meta["example"] = ds.example;
    meta["seed"] = ds.seed;
    for (const auto& [key, value] : ds.params) meta[key] = value;
    atomic_write(join(dir, "meta.json"),
                 [&](std::ostream& out) { out << meta.dump(2) << '\n'; });
    for (const char* f : {"X.csv", "A.edges", "B_true.csv", "truth.jsonl", "meta.json"}) {
        manifest.file(f);
    }
}

struct FitInputs {
    Eigen::MatrixXd x;
    Eigen::MatrixXd embedding;
};

FitOutcome fit_stage(const Eigen::MatrixXd& x, const Eigen::MatrixXd& embedding,
                     const RunConfig& config, int threads, const std::string& dir,
                     ManifestWriter& manifest, std::uint64_t cv_seed,
                     const std::string& log_tag) {
    StageTimer timer(log_tag + "fit");
    FitOutcome out;
    const Standardization st = column_standardization(x);
    const Eigen::MatrixXd standardized = apply_standardization(x, st);
    out.sigma_x = config.sigma_x ? *config.sigma_x : median_heuristic(standardized);
    out.sigma_b = config.sigma_b ? *config.sigma_b : median_heuristic(embedding);

    KernelConfig kernel{out.sigma_x, out.sigma_b};
    std::vector<double> grid = config.resolved_lambda_grid();
    if (grid.size() == 1) {
        out.lambda = grid.front();
        out.lambda_rule = "grid-of-one";
    } else {
        const CvPlan plan =
            kfold_split(static_cast<int>(x.rows()), config.fold_count, cv_seed);
        const LambdaCvResult cv = cv_lambda(x, embedding, kernel, grid, plan, threads);
        out.lambda = cv.best_lambda;
        out.lambda_rule = "cv";
        atomic_write(join(dir, "cv_lambda.csv"), [&](std::ostream& o) {
            o << "lambda,fold,heldout_loss\n";
            char buf[96];
            for (const auto& [lambda, fold, loss] : cv.table) {
                std::snprintf(buf, sizeof(buf), "%.10g,%d,%.10g\n", lambda, fold, loss);
                o << buf;
            }
        });
        manifest.file("cv_lambda.csv");
    }

    FitConfig fit_cfg;
    fit_cfg.lambda = out.lambda;
    fit_cfg.kernel = kernel;
    out.model = fit(x, embedding, fit_cfg);
    save_model(out.model, join(dir, "model.bin"));
    manifest.file("model.bin");
    manifest.selection({{"stage", "fit"},
                        {"lambda", out.lambda},
                        {"lambda_rule", out.lambda_rule},
                        {"sigma_x", out.sigma_x},
                        {"sigma_b", out.sigma_b}});
    manifest.stage(log_tag + "fit", timer.finish("lambda=" + std::to_string(out.lambda)));
    return out;
}

GraphsOutcome graphs_stage(const RepresenterModel& model, const Eigen::MatrixXd& targets,
                           const RunConfig& config, int threads, std::uint64_t seed,
                           const std::string& dir, ManifestWriter& manifest,
                           const std::string& log_tag) {
    StageTimer timer(log_tag + "graphs");
    GraphsOutcome out;

    if (config.delta_fixed) {
        out.delta = *config.delta_fixed;
        out.delta_rule = "fixed";
    } else if (config.delta_grid.size() == 1) {
        out.delta = config.delta_grid.front();
        out.delta_rule = "grid-of-one";
    } else {
        // Stability selection over refits on DISJOINT folds at the model's
        // lambda: disjoint fits have independent sampling noise, so their
        // edge sets can only agree on real structure.
        const int n = model.n();
        const CvPlan plan = kfold_split(n, config.fold_count, derive_seed(seed, "delta-cv"));
        std::vector<OmegaField> fold_fields(static_cast<std::size_t>(config.fold_count));
        for (int f = 1; f <= config.fold_count; ++f) {
            Eigen::Index keep = 0;
            for (int i = 0; i < n; ++i) {
                if (plan.labels[static_cast<std::size_t>(i)] == f) ++keep;
            }
            if (keep < 2) {
                throw std::invalid_argument("graphs: folds too small for threshold selection");
            }
            Eigen::MatrixXd xf(keep, model.d()), bf(keep, model.m());
            Eigen::Index row = 0;
            for (int i = 0; i < n; ++i) {
                if (plan.labels[static_cast<std::size_t>(i)] != f) continue;
                xf.row(row) = model.train_x.row(i);
                bf.row(row) = model.train_b.row(i);
                ++row;
            }
            FitConfig cfg;
            cfg.lambda = model.lambda;
            cfg.kernel = model.kernel;
            cfg.standardize = false;  // rows are already on the model's scale
            const RepresenterModel fold_model = fit(xf, bf, cfg);
            fold_fields[static_cast<std::size_t>(f - 1)] =
                omega(fold_model, targets,
                      config.resolved_eval_subsample(fold_model.n()),
                      derive_seed(seed, "omega-fold-" + std::to_string(f)), threads);
        }
        std::vector<double> grid =
            config.delta_grid.empty() ? auto_delta_grid(fold_fields) : config.delta_grid;
        const DeltaCvResult cv = cv_delta(fold_fields, grid);
        out.delta = cv.best_delta;
        out.delta_rule = "cv";
        atomic_write(join(dir, "cv_delta.csv"), [&](std::ostream& o) {
            o << "delta,stability_score\n";
            char buf[64];
            for (std::size_t i = 0; i < cv.grid.size(); ++i) {
                std::snprintf(buf, sizeof(buf), "%.10g,%.10g\n", cv.grid[i], cv.stability[i]);
                o << buf;
            }
        });
        manifest.file("cv_delta.csv");
    }

    out.field = omega(model, targets, config.resolved_eval_subsample(model.n()),
                      derive_seed(seed, "omega"), threads);
    out.edges = threshold_edges(out.field, out.delta);
    write_omega_csv(out.field, join(dir, "omega.csv"));
    write_edges_jsonl(out.edges, join(dir, "edges.jsonl"));
    manifest.file("omega.csv");
    manifest.file("edges.jsonl");
    manifest.selection(
        {{"stage", "graphs"}, {"delta", out.delta}, {"delta_rule", out.delta_rule}});
    manifest.stage(log_tag + "graphs", timer.finish("delta=" + std::to_string(out.delta)));
    return out;
}

void write_metrics_csv(const std::string& path, const std::string& example, int n, int d,
                       const std::vector<std::pair<MetricReport, MetricReport>>& rows) {
    atomic_write(path, [&](std::ostream& out) {
        out << "example,n,d,replication,node_mode,fpr,tpr,f1,shd,mcc\n";
        char buf[160];
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const auto emit = [&](const char* mode, const MetricReport& m) {
                std::snprintf(buf, sizeof(buf), "%s,%d,%d,%zu,%s,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                              example.c_str(), n, d, r, mode, m.fpr, m.tpr, m.f1, m.shd, m.mcc);
                out << buf;
            };
            emit("per-node-mean", rows[r].first);
            emit("pooled", rows[r].second);
        }
    });
}

void write_summary_csv(const std::string& path, const std::string& example, int n, int d,
                       const Summary& per_node, const Summary& pooled) {
    atomic_write(path, [&](std::ostream& out) {
        out << "example,n,d,node_mode,fpr,tpr,f1,shd,mcc\n";
        char buf[224];
        const auto emit = [&](const char* mode, const Summary& s) {
            std::snprintf(buf, sizeof(buf),
                          "%s,%d,%d,%s,%.3f(%.3f),%.3f(%.3f),%.3f(%.3f),%.3f(%.3f),%.3f(%.3f)\n",
                          example.c_str(), n, d, mode, s.mean.fpr, s.se.fpr, s.mean.tpr, s.se.tpr,
                          s.mean.f1, s.se.f1, s.mean.shd, s.se.shd, s.mean.mcc, s.se.mcc);
            out << buf;
        };
        emit("per-node-mean", per_node);
        emit("pooled", pooled);
    });
}

struct RepResult {
    bool ok = false;
    std::string error;
    MetricReport per_node_mean;
    MetricReport pooled;
    double lambda = 0.0;
    double delta = 0.0;
    std::string lambda_rule, delta_rule;
};

void save_rep_result(const RepResult& r, const std::string& dir) {
    nlohmann::json j;
    j["ok"] = r.ok;
    j["error"] = r.error;
    j["lambda"] = r.lambda;
    j["delta"] = r.delta;
    j["lambda_rule"] = r.lambda_rule;
    j["delta_rule"] = r.delta_rule;
    const auto report = [](const MetricReport& m) {
        return nlohmann::json{
            {"fpr", m.fpr}, {"tpr", m.tpr}, {"f1", m.f1}, {"shd", m.shd}, {"mcc", m.mcc}};
    };
    j["per_node_mean"] = report(r.per_node_mean);
    j["pooled"] = report(r.pooled);
    atomic_write(join(dir, "result.json"), [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

RepResult load_rep_result(const std::string& dir) {
    std::ifstream in(join(dir, "result.json"));
    nlohmann::json j;
    in >> j;
    RepResult r;
    r.ok = j.at("ok").get<bool>();
    r.error = j.at("error").get<std::string>();
    r.lambda = j.at("lambda").get<double>();
    r.delta = j.at("delta").get<double>();
    r.lambda_rule = j.at("lambda_rule").get<std::string>();
    r.delta_rule = j.at("delta_rule").get<std::string>();
    const auto report = [](const nlohmann::json& m) {
        MetricReport out;
        out.fpr = m.at("fpr").get<double>();
        out.tpr = m.at("tpr").get<double>();
        out.f1 = m.at("f1").get<double>();
        out.shd = m.at("shd").get<double>();
        out.mcc = m.at("mcc").get<double>();
        return out;
    };
    r.per_node_mean = report(j.at("per_node_mean"));
    r.pooled = report(j.at("pooled"));
    return r;
}

RepResult run_replication(const RunConfig& config, int rep, const std::string& dir, int threads) {
    const std::string tag = "rep " + std::to_string(rep) + " ";
    fs::create_directories(dir);
    ManifestWriter manifest(dir, "replication", config);
    RepResult result;

    const std::uint64_t rep_seed = derive_seed(config.seed, "replication-" + std::to_string(rep));

    StageTimer sim_timer(tag + "simulate");
    const Dataset ds = generate_dataset(config, rep_seed);
    write_dataset(ds, dir, manifest);
    manifest.stage(tag + "simulate", sim_timer.finish(config.example));

    StageTimer embed_timer(tag + "embed");
    Eigen::MatrixXd embedding;
    if (config.resolved_embedding_mode() == "ase") {
        embedding = ase(ds.adjacency, config.resolved_m());
    } else {
        embedding = ds.b_true;
    }
    write_matrix_csv(embedding, join(dir, "embedding.csv"));
    manifest.file("embedding.csv");
    manifest.stage(tag + "embed", embed_timer.finish(config.resolved_embedding_mode()));

    const FitOutcome fitted = fit_stage(ds.x, embedding, config, threads, dir, manifest,
                                        derive_seed(rep_seed, "cv"), tag);
    const GraphsOutcome graphs = graphs_stage(fitted.model, embedding, config, threads,
                                              rep_seed, dir, manifest, tag);

    StageTimer eval_timer(tag + "evaluate");
    const std::vector<ConfusionCounts> counts = confusion(graphs.edges, ds.truth);
    result.per_node_mean = replication_report(counts, AggregationMode::PerNodeMean);
    result.pooled = replication_report(counts, AggregationMode::Pooled);
    manifest.stage(tag + "evaluate", eval_timer.finish());

    result.ok = true;
    result.lambda = fitted.lambda;
    result.delta = graphs.delta;
    result.lambda_rule = fitted.lambda_rule;
    result.delta_rule = graphs.delta_rule;
    save_rep_result(result, dir);
    manifest.file("result.json");
    manifest.finish();
    return result;
}

}  // namespace

Dataset cmd_simulate(const RunConfig& config) {
    config.validate();
    require(!config.example.empty(), "simulate: an example name is required");
    fs::create_directories(config.out_dir);
    ManifestWriter manifest(config.out_dir, "simulate", config);
    StageTimer timer("simulate");
    const Dataset ds = generate_dataset(config, config.seed);
    write_dataset(ds, config.out_dir, manifest);
    manifest.stage("simulate", timer.finish(config.example));
    manifest.finish();
    return ds;
}

Eigen::MatrixXd cmd_embed(const RunConfig& config) {
    require(!config.edges_path.empty(), "embed: edges_path is required");
    fs::create_directories(config.out_dir);
    ManifestWriter manifest(config.out_dir, "embed", config);
    StageTimer timer("embed");
    const Eigen::MatrixXd a = load_edge_list(config.edges_path, config.n);
    const Eigen::MatrixXd embedding = ase(a, config.resolved_m());
    write_matrix_csv(embedding, join(config.out_dir, "embedding.csv"));
    manifest.file("embedding.csv");
    manifest.stage("embed", timer.finish("m=" + std::to_string(config.m)));
    manifest.finish();
    return embedding;
}

FitOutcome cmd_fit(const RunConfig& config) {
    require(!config.data_path.empty(), "fit: data_path is required");
    const Eigen::MatrixXd x = read_matrix_csv(config.data_path);
    Eigen::MatrixXd embedding;
    if (!config.embedding_path.empty()) {
        embedding = read_matrix_csv(config.embedding_path);
    } else if (!config.edges_path.empty()) {
        embedding =
            ase(load_edge_list(config.edges_path, static_cast<int>(x.rows())), config.resolved_m());
    } else {
        throw std::invalid_argument("fit: either embedding_path or edges_path is required");
    }
    require(embedding.rows() == x.rows(), "fit: data and embedding row counts differ");
    fs::create_directories(config.out_dir);
    ManifestWriter manifest(config.out_dir, "fit", config);
    const FitOutcome out = fit_stage(x, embedding, config, config.resolved_threads(),
                                     config.out_dir, manifest,
                                     derive_seed(config.seed, "cv"), "");
    manifest.finish();
    return out;
}

GraphsOutcome cmd_graphs(const RunConfig& config) {
    require(!config.model_path.empty(), "graphs: model_path is required");
    const RepresenterModel model = load_model(config.model_path);
    const Eigen::MatrixXd targets = config.embedding_path.empty()
                                        ? model.train_b
                                        : read_matrix_csv(config.embedding_path);
    fs::create_directories(config.out_dir);
    ManifestWriter manifest(config.out_dir, "graphs", config);
    const GraphsOutcome out =
        graphs_stage(model, targets, config, config.resolved_threads(),
                     derive_seed(config.seed, "graphs"), config.out_dir, manifest, "");
    manifest.finish();
    return out;
}

EvaluateOutcome cmd_evaluate(const RunConfig& config) {
    require(!config.pred_path.empty() && !config.truth_path.empty(),
            "evaluate: pred_path and truth_path are required");
    EdgeSetCollection pred = read_edges_jsonl(config.pred_path);
    EdgeSetCollection truth = read_edges_jsonl(config.truth_path);
    const int dim = std::max(pred.dim, truth.dim);
    pred.dim = dim;
    truth.dim = dim;
    fs::create_directories(config.out_dir);
    ManifestWriter manifest(config.out_dir, "evaluate", config);
    StageTimer timer("evaluate");
    const std::vector<ConfusionCounts> counts = confusion(pred, truth);
    EvaluateOutcome out;
    out.per_node_mean = replication_report(counts, AggregationMode::PerNodeMean);
    out.pooled = replication_report(counts, AggregationMode::Pooled);
    const std::string example = config.example.empty() ? "external" : config.example;
    write_metrics_csv(join(config.out_dir, "metrics.csv"), example, pred.node_count, dim,
                      {{out.per_node_mean, out.pooled}});
    write_summary_csv(join(config.out_dir, "summary.csv"), example, pred.node_count, dim,
                      summarize({out.per_node_mean}), summarize({out.pooled}));
    manifest.file("metrics.csv");
    manifest.file("summary.csv");
    manifest.stage("evaluate", timer.finish());
    manifest.finish();
    return out;
}

namespace {

int run_external(const RunConfig& config) {
    // Same pipeline on user files: embed/fit/graphs, then evaluate when a
    // ground truth is available.
    RunConfig stage = config;
    stage.out_dir = config.out_dir;
    const FitOutcome fitted = cmd_fit(stage);
    stage.model_path = join(config.out_dir, "model.bin");
    const GraphsOutcome graphs = cmd_graphs(stage);
    (void)graphs;
    if (!config.truth_path.empty()) {
        stage.pred_path = join(config.out_dir, "edges.jsonl");
        cmd_evaluate(stage);
    }
    return 0;
}

}  // namespace

int cmd_run(const RunConfig& config) {
    config.validate();
    fs::create_directories(config.out_dir);
    if (!config.example.empty()) {
        atomic_write(join(config.out_dir, "config.json"), [&](std::ostream& out) {
            out << config_to_json(config).dump(2) << '\n';
        });
    }
    if (config.example.empty()) return run_external(config);

    const int total_threads = config.resolved_threads();
    const int workers = std::max(1, std::min(total_threads, config.replications));
    const int inner_threads = std::max(1, total_threads / workers);

    std::vector<RepResult> results(static_cast<std::size_t>(config.replications));
    parallel_for(config.replications, workers, [&](std::int64_t rep) {
        char name[32];
        std::snprintf(name, sizeof(name), "rep_%03d", static_cast<int>(rep));
        const std::string dir = join(config.out_dir, name);
        auto& slot = results[static_cast<std::size_t>(rep)];
        if (config.resume && fs::exists(join(dir, "result.json")) && manifest_valid(dir)) {
            slot = load_rep_result(dir);
            std::lock_guard<std::mutex> lock(log_mutex);
            std::fprintf(stderr, "[rep %d] resumed from %s\n", static_cast<int>(rep),
                         dir.c_str());
            return;
        }
        try {
            slot = run_replication(config, static_cast<int>(rep), dir, inner_threads);
        } catch (const std::exception& e) {
            slot.ok = false;
            slot.error = e.what();
            std::lock_guard<std::mutex> lock(log_mutex);
            std::fprintf(stderr, "[rep %d] FAILED: %s\n", static_cast<int>(rep), e.what());
        }
    });

    ManifestWriter manifest(config.out_dir, "run", config);
    std::vector<std::pair<MetricReport, MetricReport>> rows;
    std::vector<MetricReport> per_node, pooled;
    int failures = 0;
    for (int rep = 0; rep < config.replications; ++rep) {
        const auto& r = results[static_cast<std::size_t>(rep)];
        if (!r.ok) {
            ++failures;
            manifest.selection({{"replication", rep}, {"error", r.error}});
            continue;
        }
        rows.emplace_back(r.per_node_mean, r.pooled);
        per_node.push_back(r.per_node_mean);
        pooled.push_back(r.pooled);
        manifest.selection({{"replication", rep},
                            {"lambda", r.lambda},
                            {"lambda_rule", r.lambda_rule},
                            {"delta", r.delta},
                            {"delta_rule", r.delta_rule}});
    }
    if (!rows.empty()) {
        write_metrics_csv(join(config.out_dir, "metrics.csv"), config.example, config.n, config.d,
                          rows);
        write_summary_csv(join(config.out_dir, "summary.csv"), config.example, config.n, config.d,
                          summarize(per_node), summarize(pooled));
        manifest.file("metrics.csv");
        manifest.file("summary.csv");
        const Summary headline = summarize(config.aggregation == "pooled" ? pooled : per_node);
        std::lock_guard<std::mutex> lock(log_mutex);
        std::fprintf(stderr,
                     "[run] %d/%d replications ok, %s F1 %.3f(%.3f) FPR %.3f(%.3f) MCC %.3f(%.3f)\n",
                     config.replications - failures, config.replications,
                     config.aggregation.c_str(), headline.mean.f1, headline.se.f1,
                     headline.mean.fpr, headline.se.fpr, headline.mean.mcc, headline.se.mcc);
    }
    manifest.file("config.json");
    manifest.finish();
    return failures == 0 ? 0 : 1;
}

bool manifest_valid(const std::string& dir) {
    const fs::path path = fs::path(dir) / "manifest.json";
    if (!fs::exists(path)) return false;
    nlohmann::json doc;
    {
        std::ifstream in(path);
        if (!in) return false;
        try {
            in >> doc;
        } catch (...) {
            return false;
        }
    }
    if (!doc.contains("commands")) return false;
    for (const auto& command : doc["commands"]) {
        for (const auto& f : command["files"]) {
            const fs::path full = fs::path(dir) / f.at("path").get<std::string>();
            if (!fs::exists(full)) return false;
            if (file_checksum(full.string()) != f.at("checksum").get<std::string>()) return false;
        }
    }
    return true;
}

}  // namespace hetgm
