#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gaboost/csv.hpp"
#include "gaboost/eval.hpp"
#include "gaboost/gbt.hpp"
#include "gaboost/rng.hpp"
#include "gaboost/sparse.hpp"

namespace gaboost::baselines {

// Chi-square statistic per feature over per-class value sums: observed
// O_cj = sum of x_ij over class-c rows, expected E_cj proportional to class
// size. Features with zero total score 0.
inline std::vector<double> chi2_scores(const SparseMatrix& x, std::span<const int> y) {
    if (x.rows() != static_cast<std::int32_t>(y.size()))
        throw std::invalid_argument("chi2_scores: label count does not match row count");
    std::int64_t class_count[2] = {0, 0};
    for (int v : y) {
        if (v != 0 && v != 1) throw std::invalid_argument("chi2_scores: labels must be 0 or 1");
        ++class_count[v];
    }
    const auto cols = static_cast<std::size_t>(x.cols());
    std::vector<double> observed0(cols, 0.0), observed1(cols, 0.0);
    for (std::int32_t r = 0; r < x.rows(); ++r) {
        auto& observed = y[static_cast<std::size_t>(r)] == 0 ? observed0 : observed1;
        for (const auto& e : x.row(r)) {
            if (e.value < 0.0) throw std::invalid_argument("chi2_scores: negative feature value");
            observed[static_cast<std::size_t>(e.index)] += e.value;
        }
    }
    const auto n = static_cast<double>(y.size());
    std::vector<double> scores(cols, 0.0);
    for (std::size_t j = 0; j < cols; ++j) {
        const double total = observed0[j] + observed1[j];
        if (total == 0.0) continue;
        double chi2 = 0.0;
        const double o[2] = {observed0[j], observed1[j]};
        for (int c = 0; c < 2; ++c) {
            const double expected = total * (static_cast<double>(class_count[c]) / n);
            if (expected > 0.0) {
                const double d = o[c] - expected;
                chi2 += d * d / expected;
            }
        }
        scores[j] = chi2;
    }
    return scores;
}

// Indices of the k best-scoring features; ties go to the lower index.
inline std::vector<std::int32_t> chi2_select(std::span<const double> scores, std::int32_t k) {
    if (k < 0 || static_cast<std::size_t>(k) > scores.size())
        throw std::invalid_argument("chi2_select: k exceeds the number of features");
    std::vector<std::int32_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
        return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
    });
    order.resize(static_cast<std::size_t>(k));
    return order;
}

// index\tterm\tscore, sorted by score descending (ties by index).
inline std::string format_chi2_tsv(std::span<const double> scores, std::span<const std::string> terms) {
    auto order = chi2_select(scores, static_cast<std::int32_t>(scores.size()));
    std::ostringstream out;
    for (std::int32_t idx : order) {
        out << idx << '\t'
            << (static_cast<std::size_t>(idx) < terms.size() ? terms[static_cast<std::size_t>(idx)] : "?")
            << '\t' << fmt_g(scores[static_cast<std::size_t>(idx)], 10) << '\n';
    }
    return out.str();
}

struct PcaModel {
    std::vector<double> mean;                     // column means, length V
    std::vector<std::vector<double>> components;  // k orthonormal rows of length V
    std::vector<double> explained_variance;       // eigenvalues, non-increasing

    std::int32_t k() const { return static_cast<std::int32_t>(components.size()); }
    std::int32_t dims() const { return static_cast<std::int32_t>(mean.size()); }
};

namespace detail {

// y = Cov * v without forming the covariance: Cov = Xc^T Xc / (n-1) with
// Xc = X - 1 mu^T, computed as two sparse passes plus mean corrections.
inline std::vector<double> covariance_times(const SparseMatrix& x, std::span<const double> mean,
                                            std::span<const double> v) {
    const auto n = static_cast<double>(x.rows());
    const auto cols = static_cast<std::size_t>(x.cols());
    double mean_dot_v = 0.0;
    for (std::size_t j = 0; j < cols; ++j) mean_dot_v += mean[j] * v[j];

    std::vector<double> projected(static_cast<std::size_t>(x.rows()));
    double projected_sum = 0.0;
    for (std::int32_t r = 0; r < x.rows(); ++r) {
        double dot = 0.0;
        for (const auto& e : x.row(r)) dot += e.value * v[static_cast<std::size_t>(e.index)];
        projected[static_cast<std::size_t>(r)] = dot - mean_dot_v;
        projected_sum += projected[static_cast<std::size_t>(r)];
    }

    std::vector<double> out(cols, 0.0);
    for (std::int32_t r = 0; r < x.rows(); ++r) {
        const double s = projected[static_cast<std::size_t>(r)];
        for (const auto& e : x.row(r)) out[static_cast<std::size_t>(e.index)] += e.value * s;
    }
    for (std::size_t j = 0; j < cols; ++j) out[j] = (out[j] - mean[j] * projected_sum) / (n - 1.0);
    return out;
}

inline double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline void orthogonalize(std::span<double> v, const std::vector<std::vector<double>>& basis) {
    for (const auto& u : basis) {
        double dot = 0.0;
        for (std::size_t j = 0; j < v.size(); ++j) dot += u[j] * v[j];
        for (std::size_t j = 0; j < v.size(); ++j) v[j] -= dot * u[j];
    }
}

}  // namespace detail

// Top-k principal components by power iteration with deflation (tolerance
// 1e-9, at most 1000 iterations per component). Sign convention: the
// largest-magnitude entry of each component is positive. Components are
// prefix-stable: fitting k' < k yields exactly the first k' components.
inline PcaModel pca_fit(const SparseMatrix& x, std::int32_t k) {
    const std::int32_t n = x.rows();
    const std::int32_t cols = x.cols();
    if (n < 2) throw std::invalid_argument("pca_fit: need at least 2 rows");
    if (k < 1 || k > std::min(n - 1, cols)) throw std::invalid_argument("pca_fit: k must be in [1, min(rows-1, cols)]");

    PcaModel model;
    model.mean.assign(static_cast<std::size_t>(cols), 0.0);
    for (std::int32_t r = 0; r < n; ++r)
        for (const auto& e : x.row(r)) model.mean[static_cast<std::size_t>(e.index)] += e.value;
    for (auto& m : model.mean) m /= static_cast<double>(n);

    constexpr double kTolerance = 1e-9;
    constexpr int kMaxIterations = 1000;

    for (std::int32_t c = 0; c < k; ++c) {
        Rng rng(derive_seed(0x9ca5eedULL, "pca-component", static_cast<std::uint64_t>(c)));
        std::vector<double> v(static_cast<std::size_t>(cols));
        for (auto& e : v) e = rng.uniform(-1.0, 1.0);
        detail::orthogonalize(v, model.components);
        double norm = detail::norm2(v);
        if (norm == 0.0) throw std::runtime_error("pca_fit: degenerate start vector for component " + std::to_string(c));
        for (auto& e : v) e /= norm;

        bool converged = false;
        for (int iter = 0; iter < kMaxIterations; ++iter) {
            std::vector<double> w = detail::covariance_times(x, model.mean, v);
            detail::orthogonalize(w, model.components);
            norm = detail::norm2(w);
            if (norm < 1e-14) {
                // Deflated operator vanished: remaining variance is zero and
                // any orthonormal completion is an eigenvector.
                converged = true;
                break;
            }
            double delta = 0.0;
            double align = 0.0;
            for (std::size_t j = 0; j < w.size(); ++j) align += w[j] * v[j];
            const double sign = align >= 0.0 ? 1.0 : -1.0;
            for (std::size_t j = 0; j < w.size(); ++j) {
                const double next = sign * w[j] / norm;
                delta = std::max(delta, std::fabs(next - v[j]));
                v[j] = next;
            }
            if (delta < kTolerance) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw std::runtime_error("pca_fit: power iteration did not converge for component " +
                                     std::to_string(c));

        std::size_t peak = 0;
        for (std::size_t j = 1; j < v.size(); ++j)
            if (std::fabs(v[j]) > std::fabs(v[peak])) peak = j;
        if (v[peak] < 0.0)
            for (auto& e : v) e = -e;

        const std::vector<double> cv = detail::covariance_times(x, model.mean, v);
        double eigenvalue = 0.0;
        for (std::size_t j = 0; j < v.size(); ++j) eigenvalue += v[j] * cv[j];
        model.explained_variance.push_back(std::max(0.0, eigenvalue));
        model.components.push_back(std::move(v));
    }
    return model;
}

// (X - mean) projected onto the component rows.
inline DenseMatrix pca_transform(const PcaModel& model, const SparseMatrix& x) {
    if (x.cols() != model.dims()) throw std::invalid_argument("pca_transform: column count mismatch");
    const std::int32_t k = model.k();
    std::vector<double> component_dot_mean(static_cast<std::size_t>(k), 0.0);
    for (std::int32_t c = 0; c < k; ++c) {
        const auto& u = model.components[static_cast<std::size_t>(c)];
        double dot = 0.0;
        for (std::size_t j = 0; j < u.size(); ++j) dot += u[j] * model.mean[j];
        component_dot_mean[static_cast<std::size_t>(c)] = dot;
    }
    DenseMatrix out(x.rows(), k);
    for (std::int32_t r = 0; r < x.rows(); ++r) {
        for (std::int32_t c = 0; c < k; ++c) {
            const auto& u = model.components[static_cast<std::size_t>(c)];
            double dot = 0.0;
            for (const auto& e : x.row(r)) dot += e.value * u[static_cast<std::size_t>(e.index)];
            out(r, c) = dot - component_dot_mean[static_cast<std::size_t>(c)];
        }
    }
    return out;
}

// Booster configuration for untuned comparison arms.
inline gbt::BoosterParams default_baseline_params() {
    gbt::BoosterParams p;
    p.learning_rate = 0.3;
    p.n_estimators = 100;
    p.max_depth = 6;
    p.min_child_weight = 1.0;
    p.gamma = 0.0;
    p.subsample = 1.0;
    p.colsample_bytree = 1.0;
    return p;
}

struct PcaSweepRow {
    std::int32_t components = 0;
    double accuracy_mean = 0.0;  // fraction
    double accuracy_sd = 0.0;    // population SD over folds
};

// Repeated stratified CV per component count. The PCA fit happens inside
// each training fold (no leakage); the prefix stability of the deflation
// lets one fit at max(k) serve every smaller k exactly.
inline std::vector<PcaSweepRow> pca_sweep(const SparseMatrix& matrix, std::span<const int> labels,
                                          std::span<const std::int32_t> k_range, int repeats, int folds,
                                          std::uint64_t seed, int threads = 1) {
    if (k_range.empty()) return {};
    std::vector<std::int32_t> ks(k_range.begin(), k_range.end());
    for (std::int32_t k : ks)
        if (k < 1) throw std::invalid_argument("pca_sweep: component counts must be >= 1");
    const std::int32_t k_max = *std::max_element(ks.begin(), ks.end());

    std::vector<eval::FoldPlan> plans;
    for (int r = 0; r < repeats; ++r) {
        auto rep = eval::stratified_folds(labels, folds, seed + static_cast<std::uint64_t>(r));
        for (auto& plan : rep) {
            plan.repeat = r;
            plans.push_back(std::move(plan));
        }
    }

    const gbt::BoosterParams params = default_baseline_params();
    std::vector<std::vector<double>> accuracy(ks.size(), std::vector<double>(plans.size(), 0.0));
    parallel_for(plans.size(), threads, [&](std::size_t pi) {
        const auto& plan = plans[pi];
        const SparseMatrix train_x = matrix.slice_rows(plan.train_ids);
        const SparseMatrix test_x = matrix.slice_rows(plan.test_ids);
        std::vector<int> train_y, test_y;
        for (auto id : plan.train_ids) train_y.push_back(labels[static_cast<std::size_t>(id)]);
        for (auto id : plan.test_ids) test_y.push_back(labels[static_cast<std::size_t>(id)]);

        const PcaModel pca = pca_fit(train_x, std::min<std::int32_t>(k_max, std::min(train_x.rows() - 1, train_x.cols())));
        const DenseMatrix train_t = pca_transform(pca, train_x);
        const DenseMatrix test_t = pca_transform(pca, test_x);

        for (std::size_t ki = 0; ki < ks.size(); ++ki) {
            const std::int32_t k = std::min(ks[ki], pca.k());
            DenseMatrix train_k(train_t.rows(), k), test_k(test_t.rows(), k);
            for (std::int32_t r = 0; r < train_t.rows(); ++r)
                for (std::int32_t c = 0; c < k; ++c) train_k(r, c) = train_t(r, c);
            for (std::int32_t r = 0; r < test_t.rows(); ++r)
                for (std::int32_t c = 0; c < k; ++c) test_k(r, c) = test_t(r, c);
            const gbt::GbtModel model = gbt::fit(to_sparse_all(train_k), train_y, params);
            const std::vector<int> pred = gbt::predict_label(model, to_sparse_all(test_k));
            accuracy[ki][pi] = eval::metrics(eval::confusion(test_y, pred)).accuracy;
        }
    });

    std::vector<PcaSweepRow> rows;
    rows.reserve(ks.size());
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
        double sum = 0.0;
        for (double a : accuracy[ki]) sum += a;
        const double mean = sum / static_cast<double>(accuracy[ki].size());
        double ss = 0.0;
        for (double a : accuracy[ki]) ss += (a - mean) * (a - mean);
        rows.push_back({ks[ki], mean, std::sqrt(ss / static_cast<double>(accuracy[ki].size()))});
    }
    return rows;
}

// k,accuracy,sd with accuracy as a percentage
inline std::string format_pca_sweep_csv(std::span<const PcaSweepRow> rows) {
    std::ostringstream out;
    out << "k,accuracy,sd\n";
    for (const auto& row : rows)
        out << row.components << ',' << fmt_f(row.accuracy_mean * 100.0, 2) << ',' << fmt_f(row.accuracy_sd, 3)
            << '\n';
    return out.str();
}

}  // namespace gaboost::baselines
