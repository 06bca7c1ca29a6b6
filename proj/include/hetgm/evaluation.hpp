#pragma once

#include <vector>

#include "hetgm/graph.hpp"

namespace hetgm {

struct ConfusionCounts {
    long long tp = 0;
    long long fp = 0;
    long long tn = 0;
    long long fn = 0;

    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        fp += o.fp;
        tn += o.tn;
        fn += o.fn;
        return *this;
    }
};

struct MetricReport {
    double fpr = 0.0;
    double tpr = 0.0;
    double f1 = 0.0;
    double mcc = 0.0;
    double shd = 0.0;
};

enum class AggregationMode { PerNodeMean, Pooled };

/// Per-node counts over the d(d-1)/2 unordered variable pairs.
std::vector<ConfusionCounts> confusion(const EdgeSetCollection& pred,
                                       const EdgeSetCollection& truth);

/// FPR, TPR, F1, MCC and normalized SHD with the usual zero-denominator
/// conventions: MCC = 0 if any factor sum is 0; F1 = 1 when tp=fp=fn=0;
/// FPR = 0 when fp+tn = 0; TPR = 1 when tp+fn = 0. SHD = (fp+fn) / total
/// pairs, which for undirected edge sets counts insertions and deletions.
MetricReport metrics(const ConfusionCounts& counts);

/// One replication's report: per-node metrics averaged (unweighted), or
/// counts pooled over nodes before the metric formulas.
MetricReport replication_report(const std::vector<ConfusionCounts>& per_node,
                                AggregationMode mode);

struct Summary {
    MetricReport mean;
    MetricReport se;  // standard error of the mean over replications
};

Summary summarize(const std::vector<MetricReport>& reports);

}  // namespace hetgm
