#include "hetgm/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hetgm {

std::vector<ConfusionCounts> confusion(const EdgeSetCollection& pred,
                                       const EdgeSetCollection& truth) {
    if (pred.node_count != truth.node_count || pred.dim != truth.dim) {
        throw std::invalid_argument("confusion: shape mismatch between prediction and truth");
    }
    const long long total =
        static_cast<long long>(pred.dim) * (pred.dim - 1) / 2;
    std::vector<ConfusionCounts> out(static_cast<std::size_t>(pred.node_count));
    for (int i = 0; i < pred.node_count; ++i) {
        const auto& p = pred.edges[static_cast<std::size_t>(i)];
        const auto& t = truth.edges[static_cast<std::size_t>(i)];
        std::size_t common = 0;
        auto ip = p.begin();
        auto it = t.begin();
        while (ip != p.end() && it != t.end()) {
            if (*ip == *it) {
                ++common;
                ++ip;
                ++it;
            } else if (*ip < *it) {
                ++ip;
            } else {
                ++it;
            }
        }
        auto& c = out[static_cast<std::size_t>(i)];
        c.tp = static_cast<long long>(common);
        c.fp = static_cast<long long>(p.size()) - c.tp;
        c.fn = static_cast<long long>(t.size()) - c.tp;
        c.tn = total - c.tp - c.fp - c.fn;
    }
    return out;
}

MetricReport metrics(const ConfusionCounts& c) {
    if (c.tp < 0 || c.fp < 0 || c.tn < 0 || c.fn < 0) {
        throw std::invalid_argument("metrics: negative counts");
    }
    MetricReport r;
    r.fpr = (c.fp + c.tn == 0) ? 0.0 : double(c.fp) / double(c.fp + c.tn);
    r.tpr = (c.tp + c.fn == 0) ? 1.0 : double(c.tp) / double(c.tp + c.fn);
    r.f1 = (2 * c.tp + c.fp + c.fn == 0) ? 1.0
                                         : 2.0 * double(c.tp) / double(2 * c.tp + c.fp + c.fn);
    const long long total = c.tp + c.fp + c.tn + c.fn;
    r.shd = total == 0 ? 0.0 : double(c.fp + c.fn) / double(total);
    const long long s1 = c.tp + c.fp, s2 = c.tp + c.fn, s3 = c.tn + c.fp, s4 = c.tn + c.fn;
    if (s1 == 0 || s2 == 0 || s3 == 0 || s4 == 0) {
        r.mcc = 0.0;
    } else {
        const long double num =
            static_cast<long double>(c.tp) * c.tn - static_cast<long double>(c.fp) * c.fn;
        const long double den = std::sqrt(static_cast<long double>(s1)) *
                                std::sqrt(static_cast<long double>(s2)) *
                                std::sqrt(static_cast<long double>(s3)) *
                                std::sqrt(static_cast<long double>(s4));
        r.mcc = static_cast<double>(num / den);
    }
    return r;
}

MetricReport replication_report(const std::vector<ConfusionCounts>& per_node,
                                AggregationMode mode) {
    if (per_node.empty()) throw std::invalid_argument("replication_report: empty input");
    if (mode == AggregationMode::Pooled) {
        ConfusionCounts pooled;
        for (const auto& c : per_node) pooled += c;
        return metrics(pooled);
    }
    MetricReport mean;
    for (const auto& c : per_node) {
        const MetricReport r = metrics(c);
        mean.fpr += r.fpr;
        mean.tpr += r.tpr;
        mean.f1 += r.f1;
        mean.mcc += r.mcc;
        mean.shd += r.shd;
    }
    const auto k = static_cast<double>(per_node.size());
    mean.fpr /= k;
    mean.tpr /= k;
    mean.f1 /= k;
    mean.mcc /= k;
    mean.shd /= k;
    return mean;
}

Summary summarize(const std::vector<MetricReport>& reports) {
    if (reports.empty()) throw std::invalid_argument("summarize: empty input");
    const auto k = static_cast<double>(reports.size());
    Summary s;
    for (const auto& r : reports) {
        s.mean.fpr += r.fpr;
        s.mean.tpr += r.tpr;
        s.mean.f1 += r.f1;
        s.mean.mcc += r.mcc;
        s.mean.shd += r.shd;
    }
    s.mean.fpr /= k;
    s.mean.tpr /= k;
    s.mean.f1 /= k;
    s.mean.mcc /= k;
    s.mean.shd /= k;
    if (reports.size() > 1) {
        auto se = [&](double mean, auto field) {
            double ss = 0.0;
            for (const auto& r : reports) {
                const double dev = field(r) - mean;
                ss += dev * dev;
            }
            return std::sqrt(ss / (k - 1.0)) / std::sqrt(k);
        };
        s.se.fpr = se(s.mean.fpr, [](const MetricReport& r) { return r.fpr; });
        s.se.tpr = se(s.mean.tpr, [](const MetricReport& r) { return r.tpr; });
        s.se.f1 = se(s.mean.f1, [](const MetricReport& r) { return r.f1; });
        s.se.mcc = se(s.mean.mcc, [](const MetricReport& r) { return r.mcc; });
        s.se.shd = se(s.mean.shd, [](const MetricReport& r) { return r.shd; });
    }
    return s;
}

}  // namespace hetgm
