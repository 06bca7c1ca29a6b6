"""Node-wise conditional-independence graphs on network-linked data.

Thin re-export of the compiled extension: Gaussian kernel utilities,
adjacency spectral embedding, the kernel score-matching fit, signal-strength
matrices with thresholding, cross-validation helpers, the simulation
generators and the evaluation metrics.
"""

from hetgm._core import (
    Dataset,
    KernelConfig,
    OmegaField,
    RepresenterModel,
    ase,
    choose_dim,
    cv_delta,
    cv_lambda,
    empirical_loss,
    evaluate_score,
    fit,
    gen_example1,
    gen_example2,
    gen_example3,
    grad2_k1,
    gram,
    hess12_k1,
    kendall_tau,
    kfold_split,
    load_model,
    median_heuristic,
    metrics_report,
    omega,
    procrustes_align,
    rkhs_norm_sq,
    sample_adjacency,
    save_model,
    scaled_kendall_tau,
    score_partials,
    threshold_edges,
    training_objective,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "KernelConfig",
    "OmegaField",
    "RepresenterModel",
    "ase",
    "choose_dim",
    "cv_delta",
    "cv_lambda",
    "empirical_loss",
    "evaluate_score",
    "fit",
    "gen_example1",
    "gen_example2",
    "gen_example3",
    "grad2_k1",
    "gram",
    "hess12_k1",
    "kendall_tau",
    "kfold_split",
    "load_model",
    "median_heuristic",
    "metrics_report",
    "omega",
    "procrustes_align",
    "rkhs_norm_sq",
    "sample_adjacency",
    "save_model",
    "scaled_kendall_tau",
    "score_partials",
    "threshold_edges",
    "training_objective",
]
