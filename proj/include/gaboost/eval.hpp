#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gaboost/csv.hpp"
#include "gaboost/gbt.hpp"
#include "gaboost/parallel.hpp"
#include "gaboost/rng.hpp"
#include "gaboost/sparse.hpp"

namespace gaboost::eval {

struct ConfusionMatrix {
    std::int64_t tp = 0;
    std::int64_t tn = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;

    std::int64_t total() const { return tp + tn + fp + fn; }
};

// The nine confusion-matrix metrics plus AUC when probabilities were
// available. Any 0/0 ratio is defined as 0 and flags the report as
// degenerate so aggregates stay finite.
struct MetricsReport {
    double accuracy = 0.0;
    double gmean = 0.0;
    std::optional<double> auc;
    double tpr = 0.0;
    double tnr = 0.0;
    double ppv = 0.0;
    double fpr = 0.0;
    double f1 = 0.0;
    double npv = 0.0;
    bool degenerate = false;
};

inline constexpr std::array<const char*, 9> kMetricNames = {
    "accuracy", "gmean", "auc", "tpr", "tnr", "ppv", "fpr", "f1", "npv"};

inline double metric_by_index(const MetricsReport& m, std::size_t i) {
    switch (i) {
        case 0: return m.accuracy;
        case 1: return m.gmean;
        case 2: return m.auc.value_or(0.0);
        case 3: return m.tpr;
        case 4: return m.tnr;
        case 5: return m.ppv;
        case 6: return m.fpr;
        case 7: return m.f1;
        case 8: return m.npv;
        default: throw std::out_of_range("metric index");
    }
}

inline ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred) {
    if (y_true.size() != y_pred.size()) throw std::invalid_argument("confusion: length mismatch");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i], p = y_pred[i];
        if ((t != 0 && t != 1) || (p != 0 && p != 1))
            throw std::invalid_argument("confusion: labels must be 0 or 1");
        if (t == 1 && p == 1) ++cm.tp;
        else if (t == 0 && p == 0) ++cm.tn;
        else if (t == 0 && p == 1) ++cm.fp;
        else ++cm.fn;
    }
    return cm;
}

inline MetricsReport metrics(const ConfusionMatrix& cm) {
    MetricsReport m;
    auto ratio = [&m](std::int64_t num, std::int64_t den) {
        if (den == 0) {
            m.degenerate = true;
            return 0.0;
        }
        return static_cast<double>(num) / static_cast<double>(den);
    };
    m.tpr = ratio(cm.tp, cm.tp + cm.fn);
    m.tnr = ratio(cm.tn, cm.fp + cm.tn);
    m.ppv = ratio(cm.tp, cm.tp + cm.fp);
    m.fpr = ratio(cm.fp, cm.fp + cm.tn);
    m.npv = ratio(cm.tn, cm.tn + cm.fn);
    m.f1 = (m.tpr + m.ppv) > 0.0 ? 2.0 * m.tpr * m.ppv / (m.tpr + m.ppv) : (m.degenerate = true, 0.0);
    m.accuracy = ratio(cm.tp + cm.tn, cm.total());
    m.gmean = std::sqrt(m.tpr * m.tnr);
    return m;
}

// Rank-based (Mann-Whitney) AUC with ties counted one half; identical to
// trapezoidal integration of the ROC curve.
inline double auc(std::span<const int> y_true, std::span<const double> scores) {
    if (y_true.size() != scores.size()) throw std::invalid_argument("auc: length mismatch");
    std::int64_t n_pos = 0, n_neg = 0;
    for (int v : y_true) (v == 1 ? n_pos : n_neg) += 1;
    if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("auc: both classes must be present");

    std::vector<std::size_t> order(y_true.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k)
            if (y_true[order[k]] == 1) rank_sum_pos += avg_rank;
        i = j + 1;
    }
    const double np = static_cast<double>(n_pos);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

// Metrics with the class roles exchanged ("Ham" treated as positive):
// recall' = TNR, precision' = NPV, F1' = 2*TNR*NPV/(TNR+NPV), accuracy
// unchanged.
inline MetricsReport swap_positive_metrics(const ConfusionMatrix& cm) {
    return metrics({cm.tn, cm.tp, cm.fn, cm.fp});
}

struct FoldPlan {
    int repeat = 0;
    int fold = 0;
    std::vector<std::int32_t> train_ids;
    std::vector<std::int32_t> test_ids;
};

// Stratified k-fold split: shuffle each class with a seed-derived stream, deal
// round-robin. Per-class fold counts differ by at most one. Classes smaller
// than k are tolerated; the caller is warned through `warnings`.
inline std::vector<FoldPlan> stratified_folds(std::span<const int> labels, int k, std::uint64_t seed,
                                              std::vector<std::string>* warnings = nullptr) {
    if (k < 2) throw std::invalid_argument("stratified_folds: k must be >= 2");
    const auto n = static_cast<std::int32_t>(labels.size());
    std::vector<std::vector<std::int32_t>> by_class(2);
    for (std::int32_t i = 0; i < n; ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        if (y != 0 && y != 1) throw std::invalid_argument("stratified_folds: labels must be 0 or 1");
        by_class[static_cast<std::size_t>(y)].push_back(i);
    }
    for (int c = 0; c < 2; ++c) {
        if (!by_class[static_cast<std::size_t>(c)].empty() &&
            static_cast<int>(by_class[static_cast<std::size_t>(c)].size()) < k && warnings)
            warnings->push_back("class " + std::to_string(c) + " has fewer than k=" + std::to_string(k) +
                                " members; some folds will lack it");
        Rng rng(derive_seed(seed, "stratified-fold-class", static_cast<std::uint64_t>(c)));
        rng.shuffle(by_class[static_cast<std::size_t>(c)]);
    }

    std::vector<FoldPlan> plans(static_cast<std::size_t>(k));
    for (int f = 0; f < k; ++f) plans[static_cast<std::size_t>(f)].fold = f;
    for (int c = 0; c < 2; ++c) {
        const auto& ids = by_class[static_cast<std::size_t>(c)];
        for (std::size_t i = 0; i < ids.size(); ++i)
            plans[i % static_cast<std::size_t>(k)].test_ids.push_back(ids[i]);
    }
    for (auto& plan : plans) {
        std::sort(plan.test_ids.begin(), plan.test_ids.end());
        std::vector<char> in_test(static_cast<std::size_t>(n), 0);
        for (auto id : plan.test_ids) in_test[static_cast<std::size_t>(id)] = 1;
        for (std::int32_t i = 0; i < n; ++i)
            if (!in_test[static_cast<std::size_t>(i)]) plan.train_ids.push_back(i);
    }
    return plans;
}

struct FoldRecord {
    int repeat = 0;
    int fold = 0;
    MetricsReport report;
};

struct MetricSummary {
    double min = 0.0;
    double avg = 0.0;
    double max = 0.0;
    double sd = 0.0;  // population SD over folds
};

struct CvSummary {
    std::vector<FoldRecord> records;
    std::vector<std::string> warnings;

    std::array<MetricSummary, 9> aggregate() const {
        if (records.empty()) throw std::logic_error("CvSummary: no records");
        std::array<MetricSummary, 9> out{};
        for (std::size_t mi = 0; mi < 9; ++mi) {
            double lo = metric_by_index(records.front().report, mi);
            double hi = lo, sum = 0.0;
            for (const auto& rec : records) {
                const double v = metric_by_index(rec.report, mi);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
                sum += v;
            }
            const double mean = sum / static_cast<double>(records.size());
            double ss = 0.0;
            for (const auto& rec : records) {
                const double d = metric_by_index(rec.report, mi) - mean;
                ss += d * d;
            }
            out[mi] = {lo, mean, hi, std::sqrt(ss / static_cast<double>(records.size()))};
        }
        return out;
    }

    std::vector<double> metric_values(std::size_t mi) const {
        std::vector<double> v;
        v.reserve(records.size());
        for (const auto& rec : records) v.push_back(metric_by_index(rec.report, mi));
        return v;
    }
};

// repeats x k refits of the booster on the restricted feature set. Repeat r
// derives its fold plan from seed + r. Fold evaluations are independent and
// run on the worker pool; records are keyed by (repeat, fold) so the
// aggregation order never depends on scheduling.
inline CvSummary repeated_cv(const SparseMatrix& matrix, std::span<const int> labels,
                             const gbt::BoosterParams& params, std::span<const std::int32_t> features,
                             int repeats, int k, std::uint64_t seed, int threads = 1) {
    if (repeats < 1) throw std::invalid_argument("repeated_cv: repeats must be >= 1");
    std::vector<std::int32_t> sorted_features(features.begin(), features.end());
    std::sort(sorted_features.begin(), sorted_features.end());
    sorted_features.erase(std::unique(sorted_features.begin(), sorted_features.end()), sorted_features.end());
    if (sorted_features.empty()) throw std::invalid_argument("repeated_cv: needs at least one feature");
    if (sorted_features.front() < 0 || sorted_features.back() >= matrix.cols())
        throw std::out_of_range("repeated_cv: feature index out of range for this matrix");

    const SparseMatrix sliced = matrix.slice_columns(sorted_features);

    CvSummary summary;
    std::vector<FoldPlan> plans;
    for (int r = 0; r < repeats; ++r) {
        auto rep = stratified_folds(labels, k, seed + static_cast<std::uint64_t>(r), &summary.warnings);
        for (auto& plan : rep) {
            plan.repeat = r;
            plans.push_back(std::move(plan));
        }
    }

    summary.records.resize(plans.size());
    parallel_for(plans.size(), threads, [&](std::size_t i) {
        const FoldPlan& plan = plans[i];
        const SparseMatrix train_x = sliced.slice_rows(plan.train_ids);
        const SparseMatrix test_x = sliced.slice_rows(plan.test_ids);
        std::vector<int> train_y, test_y;
        train_y.reserve(plan.train_ids.size());
        test_y.reserve(plan.test_ids.size());
        for (auto id : plan.train_ids) train_y.push_back(labels[static_cast<std::size_t>(id)]);
        for (auto id : plan.test_ids) test_y.push_back(labels[static_cast<std::size_t>(id)]);

        MetricsReport report;
        bool pos_seen = false, neg_seen = false;
        for (int y : test_y) (y == 1 ? pos_seen : neg_seen) = true;
        try {
            const gbt::GbtModel model = gbt::fit(train_x, train_y, params);
            const std::vector<double> proba = gbt::predict_proba(model, test_x);
            const std::vector<int> pred = gbt::labels_from_proba(proba);
            report = metrics(confusion(test_y, pred));
            if (pos_seen && neg_seen) report.auc = auc(test_y, proba);
            else report.degenerate = true;
        } catch (const std::exception&) {
            report.degenerate = true;  // untrainable fold counts as all-zero metrics
        }
        summary.records[i] = {plan.repeat, plan.fold, report};
    });

    for (const auto& rec : summary.records)
        if (rec.report.degenerate) {
            summary.warnings.push_back("degenerate fold (repeat " + std::to_string(rec.repeat) + ", fold " +
                                       std::to_string(rec.fold) + "): zero ratios recorded as 0");
        }
    return summary;
}

struct Description {
    double mean = 0.0;
    double sd = 0.0;
    double min = 0.0;
    double q25 = 0.0;
    double median = 0.0;
    double q75 = 0.0;
    double max = 0.0;
};

// Quartiles by linear interpolation at position q * (n - 1); SD is the
// population SD.
inline Description describe(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("describe: empty input");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(sorted.size() - 1);
        const auto lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
    };
    Description d;
    double sum = 0.0;
    for (double v : sorted) sum += v;
    d.mean = sum / static_cast<double>(sorted.size());
    double ss = 0.0;
    for (double v : sorted) ss += (v - d.mean) * (v - d.mean);
    d.sd = std::sqrt(ss / static_cast<double>(sorted.size()));
    d.min = sorted.front();
    d.q25 = quantile(0.25);
    d.median = quantile(0.5);
    d.q75 = quantile(0.75);
    d.max = sorted.back();
    return d;
}

// repeat,fold,accuracy,gmean,auc,tpr,tnr,ppv,fpr,f1,npv
inline std::string format_fold_csv(const CvSummary& summary) {
    std::ostringstream out;
    out << "repeat,fold";
    for (const char* name : kMetricNames) out << ',' << name;
    out << '\n';
    for (const auto& rec : summary.records) {
        out << rec.repeat << ',' << rec.fold;
        for (std::size_t mi = 0; mi < 9; ++mi) out << ',' << fmt_g(metric_by_index(rec.report, mi), 10);
        out << '\n';
    }
    return out.str();
}

// metric,min,avg,max,sd with metric values as percentages and the SD as a
// fraction, mirroring the usual reporting layout.
inline std::string format_summary_csv(const CvSummary& summary) {
    const auto agg = summary.aggregate();
    std::ostringstream out;
    out << "metric,min,avg,max,sd\n";
    for (std::size_t mi = 0; mi < 9; ++mi) {
        out << kMetricNames[mi] << ',' << fmt_f(agg[mi].min * 100.0, 2) << ',' << fmt_f(agg[mi].avg * 100.0, 2)
            << ',' << fmt_f(agg[mi].max * 100.0, 2) << ',' << fmt_f(agg[mi].sd, 3) << '\n';
    }
    return out.str();
}

}  // namespace gaboost::eval
