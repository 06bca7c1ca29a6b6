#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hetgm/datagen.hpp"
#include "hetgm/embedding.hpp"
#include "hetgm/evaluation.hpp"
#include "hetgm/graph.hpp"
#include "hetgm/kernels.hpp"
#include "hetgm/model_selection.hpp"
#include "hetgm/score_fit.hpp"

namespace py = pybind11;
using namespace hetgm;

namespace {

EdgeSetCollection make_edge_sets(const std::vector<std::vector<std::pair<int, int>>>& edges,
                                 int d) {
    EdgeSetCollection out;
    out.node_count = static_cast<int>(edges.size());
    out.dim = d;
    out.edges = edges;
    for (auto& e : out.edges) std::sort(e.begin(), e.end());
    return out;
}

py::dict report_to_dict(const MetricReport& r) {
    py::dict d;
    d["fpr"] = r.fpr;
    d["tpr"] = r.tpr;
    d["f1"] = r.f1;
    d["mcc"] = r.mcc;
    d["shd"] = r.shd;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Heterogeneous conditional-independence graphs on network-linked data";

    py::class_<KernelConfig>(m, "KernelConfig")
        .def(py::init([](double sigma_x, double sigma_b) {
                 KernelConfig k{sigma_x, sigma_b};
                 k.validate();
                 return k;
             }),
             py::arg("sigma_x"), py::arg("sigma_b"))
        .def_readonly("sigma_x", &KernelConfig::sigma_x)
        .def_readonly("sigma_b", &KernelConfig::sigma_b);

    m.def("median_heuristic", &median_heuristic, py::arg("points"), py::arg("seed") = 0);
    m.def("gram", &gram, py::arg("points"), py::arg("sigma"));
    m.def("grad2_k1", &grad2_k1, py::arg("x"), py::arg("x_prime"), py::arg("sigma"), py::arg("j"));
    m.def("hess12_k1", &hess12_k1, py::arg("x"), py::arg("x_prime"), py::arg("sigma"),
          py::arg("j"), py::arg("l"));

    m.def("ase", &ase, py::arg("adjacency"), py::arg("dim"));
    m.def("choose_dim", &choose_dim, py::arg("adjacency"), py::arg("max_dim"));
    m.def("procrustes_align", &procrustes_align, py::arg("b_hat"), py::arg("b_ref"));

    py::class_<RepresenterModel>(m, "RepresenterModel")
        .def_readonly("train_x", &RepresenterModel::train_x)
        .def_readonly("train_b", &RepresenterModel::train_b)
        .def_readonly("coeffs", &RepresenterModel::coeffs)
        .def_readonly("lambda_", &RepresenterModel::lambda)
        .def_readonly("col_mean", &RepresenterModel::col_mean)
        .def_readonly("col_scale", &RepresenterModel::col_scale)
        .def_property_readonly("sigma_x",
                               [](const RepresenterModel& m_) { return m_.kernel.sigma_x; })
        .def_property_readonly("sigma_b",
                               [](const RepresenterModel& m_) { return m_.kernel.sigma_b; });

    m.def(
        "fit",
        [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& b, double lambda, double sigma_x,
           double sigma_b, bool standardize) {
            FitConfig cfg;
            cfg.lambda = lambda;
            cfg.kernel = KernelConfig{sigma_x, sigma_b};
            cfg.standardize = standardize;
            return fit(x, b, cfg);
        },
        py::arg("x"), py::arg("b"), py::arg("lambda_"), py::arg("sigma_x"), py::arg("sigma_b"),
        py::arg("standardize") = true);
    m.def("evaluate_score", &evaluate_score, py::arg("model"), py::arg("x"), py::arg("beta"));
    m.def("score_partials", &score_partials, py::arg("model"), py::arg("x"), py::arg("beta"));
    m.def("empirical_loss", &empirical_loss, py::arg("model"), py::arg("x_eval"),
          py::arg("b_eval"));
    m.def("rkhs_norm_sq", &rkhs_norm_sq, py::arg("model"));
    m.def("training_objective", &training_objective, py::arg("model"));
    m.def("save_model", &save_model, py::arg("model"), py::arg("path"));
    m.def("load_model", &load_model, py::arg("path"));

    py::class_<OmegaField>(m, "OmegaField")
        .def_readonly("dim", &OmegaField::dim)
        .def_readonly("matrices", &OmegaField::matrices)
        .def_property_readonly("node_count", &OmegaField::node_count);

    m.def(
        "omega",
        [](const RepresenterModel& model, const Eigen::MatrixXd& targets,
           std::optional<int> eval_subsample, std::uint64_t seed, int threads) {
            return omega(model, targets, eval_subsample, seed, threads);
        },
        py::arg("model"), py::arg("targets"), py::arg("eval_subsample") = py::none(),
        py::arg("seed") = 0, py::arg("threads") = 1);
    m.def(
        "threshold_edges",
        [](const OmegaField& field, double delta) { return threshold_edges(field, delta).edges; },
        py::arg("field"), py::arg("delta"));

    m.def(
        "kfold_split",
        [](int n, int k, std::uint64_t seed) { return kfold_split(n, k, seed).labels; },
        py::arg("n"), py::arg("k"), py::arg("seed") = 0);
    m.def(
        "cv_lambda",
        [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& b, double sigma_x, double sigma_b,
           const std::vector<double>& grid, int folds, std::uint64_t seed, int threads) {
            const auto res = cv_lambda(x, b, KernelConfig{sigma_x, sigma_b}, grid,
                                       kfold_split(static_cast<int>(x.rows()), folds, seed),
                                       threads);
            return py::make_tuple(res.best_lambda, res.grid, res.mean_loss);
        },
        py::arg("x"), py::arg("b"), py::arg("sigma_x"), py::arg("sigma_b"), py::arg("grid"),
        py::arg("folds") = 5, py::arg("seed") = 0, py::arg("threads") = 1);
    m.def(
        "cv_delta",
        [](const std::vector<OmegaField>& fields, const std::vector<double>& grid) {
            const auto res = cv_delta(fields, grid);
            return py::make_tuple(res.best_delta, res.grid, res.stability);
        },
        py::arg("fields_by_fold"), py::arg("delta_grid"));

    py::class_<Dataset>(m, "Dataset")
        .def_readonly("example", &Dataset::example)
        .def_readonly("x", &Dataset::x)
        .def_readonly("adjacency", &Dataset::adjacency)
        .def_readonly("b_true", &Dataset::b_true)
        .def_readonly("seed", &Dataset::seed)
        .def_property_readonly("truth",
                               [](const Dataset& ds) { return ds.truth.edges; });

    m.def("sample_adjacency", &sample_adjacency, py::arg("p"), py::arg("seed"));
    m.def("gen_example1", &gen_example1, py::arg("n"), py::arg("d"), py::arg("seed"),
          py::arg("latent_dim") = 3);
    m.def("gen_example2", &gen_example2, py::arg("n"), py::arg("d"), py::arg("seed"));
    m.def("gen_example3", &gen_example3, py::arg("n"), py::arg("d"), py::arg("seed"),
          py::arg("similarity_network") = false);
    m.def("kendall_tau", &kendall_tau, py::arg("perm_a"), py::arg("perm_b"));
    m.def("scaled_kendall_tau", &scaled_kendall_tau, py::arg("perm_a"), py::arg("perm_b"));

    m.def(
        "metrics_report",
        [](const std::vector<std::vector<std::pair<int, int>>>& pred,
           const std::vector<std::vector<std::pair<int, int>>>& truth, int d,
           const std::string& mode) {
            const auto counts = confusion(make_edge_sets(pred, d), make_edge_sets(truth, d));
            const auto agg = mode == "pooled" ? AggregationMode::Pooled
                                              : AggregationMode::PerNodeMean;
            return report_to_dict(replication_report(counts, agg));
        },
        py::arg("pred"), py::arg("truth"), py::arg("d"), py::arg("mode") = "per-node-mean");
}
