#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gaboost/rng.hpp"
#include "gaboost/sparse.hpp"

namespace gaboost::gbt {

// The seven tuned boosting hyperparameters plus the fixed seed and L2 leaf
// regularizer. Range enforcement for the tuned seven lives with the genetic
// search; fit() only rejects values that make no sense at all.
struct BoosterParams {
    double learning_rate = 0.3;
    int n_estimators = 100;
    int max_depth = 6;
    double min_child_weight = 1.0;
    double gamma = 0.0;
    double subsample = 1.0;
    double colsample_bytree = 1.0;
    std::uint64_t seed = 723;
    double lambda = 1.0;

    void validate() const {
        if (!(learning_rate > 0.0) || learning_rate > 1.0)
            throw std::invalid_argument("learning_rate must be in (0, 1]");
        if (n_estimators < 1) throw std::invalid_argument("n_estimators must be >= 1");
        if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
        if (min_child_weight < 0.0) throw std::invalid_argument("min_child_weight must be >= 0");
        if (gamma < 0.0) throw std::invalid_argument("gamma must be >= 0");
        if (!(subsample > 0.0) || subsample > 1.0) throw std::invalid_argument("subsample must be in (0, 1]");
        if (!(colsample_bytree > 0.0) || colsample_bytree > 1.0)
            throw std::invalid_argument("colsample_bytree must be in (0, 1]");
        if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
    }
};

// Flat node array per tree; feature == -1 marks a leaf. Absent (unstored)
// values follow default_left, the direction the missing rows took in
// training.
struct TreeNode {
    std::int32_t feature = -1;
    double threshold = 0.0;
    bool default_left = false;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double weight = 0.0;

    bool is_leaf() const { return feature < 0; }
};

using Tree = std::vector<TreeNode>;

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Gradient and hessian of the logistic loss with respect to the log-odds.
inline std::pair<double, double> logistic_grad_hess(double p, int y) {
    return {p - static_cast<double>(y), p * (1.0 - p)};
}

// Second-order gain of splitting a node into (GL, HL) and (GR, HR),
// penalized by gamma.
inline double split_gain(double gl, double hl, double gr, double hr, double lambda, double gamma) {
    const double parent_g = gl + gr;
    const double parent_h = hl + hr;
    return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) -
                  parent_g * parent_g / (parent_h + lambda)) -
           gamma;
}

inline double leaf_weight(double g, double h, double lambda) { return -g / (h + lambda); }

struct GbtModel {
    std::vector<Tree> trees;
    double base_score = 0.0;
    BoosterParams params;
    std::int32_t feature_count = 0;

    double predict_row_margin(std::span<const SparseEntry> row) const {
        double margin = base_score;
        for (const auto& tree : trees) margin += params.learning_rate * tree_output(tree, row);
        return margin;
    }

    static double tree_output(const Tree& tree, std::span<const SparseEntry> row) {
        std::int32_t node = 0;
        while (!tree[static_cast<std::size_t>(node)].is_leaf()) {
            const TreeNode& n = tree[static_cast<std::size_t>(node)];
            const auto it = std::lower_bound(
                row.begin(), row.end(), n.feature,
                [](const SparseEntry& e, std::int32_t idx) { return e.index < idx; });
            const bool present = it != row.end() && it->index == n.feature;
            const bool go_left = present ? (it->value < n.threshold) : n.default_left;
            node = go_left ? n.left : n.right;
        }
        return tree[static_cast<std::size_t>(node)].weight;
    }
};

namespace detail {

struct ColumnEntry {
    double value;
    std::int32_t row;
};

struct NodeData {
    std::vector<std::int32_t> rows;                  // sampled rows in this node
    std::vector<std::vector<ColumnEntry>> columns;   // per sampled column, sorted by (value, row)
    double sum_g = 0.0;
    double sum_h = 0.0;
    int depth = 0;
    std::int32_t node_index = 0;
};

struct SplitChoice {
    bool found = false;
    std::size_t column = 0;      // position within the sampled column list
    double threshold = 0.0;
    bool default_left = false;
    double gain = 0.0;
};

}  // namespace detail

class Booster {
public:
    static GbtModel fit(const SparseMatrix& x, std::span<const int> y, const BoosterParams& params) {
        params.validate();
        const std::int32_t n = x.rows();
        if (n != static_cast<std::int32_t>(y.size()))
            throw std::invalid_argument("fit: label count does not match row count");
        if (n < 2) throw std::invalid_argument("fit: need at least 2 rows");
        std::int64_t positives = 0;
        for (int v : y) {
            if (v != 0 && v != 1) throw std::invalid_argument("fit: labels must be 0 or 1");
            positives += v;
        }
        if (positives == 0 || positives == n)
            throw std::invalid_argument("fit: training labels contain a single class");

        GbtModel model;
        model.params = params;
        model.feature_count = x.cols();
        const double prior = static_cast<double>(positives) / static_cast<double>(n);
        model.base_score = std::log(prior / (1.0 - prior));

        // Global CSC, each column sorted by (value, row).
        std::vector<std::vector<detail::ColumnEntry>> csc(static_cast<std::size_t>(x.cols()));
        for (std::int32_t r = 0; r < n; ++r)
            for (const auto& e : x.row(r)) csc[static_cast<std::size_t>(e.index)].push_back({e.value, r});
        for (auto& col : csc)
            std::sort(col.begin(), col.end(), [](const detail::ColumnEntry& a, const detail::ColumnEntry& b) {
                return a.value != b.value ? a.value < b.value : a.row < b.row;
            });

        std::vector<double> margins(static_cast<std::size_t>(n), model.base_score);
        std::vector<double> grad(static_cast<std::size_t>(n)), hess(static_cast<std::size_t>(n));
        std::vector<char> row_sampled(static_cast<std::size_t>(n));

        for (int t = 0; t < params.n_estimators; ++t) {
            Rng rng(derive_seed(params.seed, "gbt-tree", static_cast<std::uint64_t>(t)));

            std::vector<std::int32_t> rows;
            if (params.subsample < 1.0) {
                const auto want = std::max<std::int64_t>(1, std::llround(params.subsample * n));
                rows = rng.sample_without_replacement(n, static_cast<std::int32_t>(want));
                std::sort(rows.begin(), rows.end());
            } else {
                rows.resize(static_cast<std::size_t>(n));
                for (std::int32_t i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
            }

            std::vector<std::int32_t> cols;
            if (params.colsample_bytree < 1.0) {
                const auto want = std::max<std::int64_t>(1, std::llround(params.colsample_bytree * x.cols()));
                cols = rng.sample_without_replacement(x.cols(), static_cast<std::int32_t>(want));
                std::sort(cols.begin(), cols.end());
            } else {
                cols.resize(static_cast<std::size_t>(x.cols()));
                for (std::int32_t i = 0; i < x.cols(); ++i) cols[static_cast<std::size_t>(i)] = i;
            }

            std::fill(row_sampled.begin(), row_sampled.end(), 0);
            for (std::int32_t r : rows) row_sampled[static_cast<std::size_t>(r)] = 1;
            for (std::int32_t r : rows) {
                const auto [g, h] = logistic_grad_hess(sigmoid(margins[static_cast<std::size_t>(r)]),
                                                       y[static_cast<std::size_t>(r)]);
                grad[static_cast<std::size_t>(r)] = g;
                hess[static_cast<std::size_t>(r)] = h;
            }

            detail::NodeData root;
            root.rows = rows;
            root.columns.resize(cols.size());
            for (std::size_t c = 0; c < cols.size(); ++c) {
                const auto& full = csc[static_cast<std::size_t>(cols[c])];
                auto& slim = root.columns[c];
                slim.reserve(full.size());
                for (const auto& e : full)
                    if (row_sampled[static_cast<std::size_t>(e.row)]) slim.push_back(e);
            }
            for (std::int32_t r : rows) {
                root.sum_g += grad[static_cast<std::size_t>(r)];
                root.sum_h += hess[static_cast<std::size_t>(r)];
            }

            Tree tree = grow_tree(std::move(root), cols, grad, hess, params);
            for (std::int32_t r = 0; r < n; ++r)
                margins[static_cast<std::size_t>(r)] +=
                    params.learning_rate * GbtModel::tree_output(tree, x.row(r));
            model.trees.push_back(std::move(tree));
        }
        return model;
    }

private:
    static Tree grow_tree(detail::NodeData root, const std::vector<std::int32_t>& cols,
                          const std::vector<double>& grad, const std::vector<double>& hess,
                          const BoosterParams& p) {
        Tree tree;
        tree.emplace_back();
        root.node_index = 0;
        std::vector<detail::NodeData> stack;
        stack.push_back(std::move(root));

        std::vector<char> go_left_mark;
        while (!stack.empty()) {
            detail::NodeData node = std::move(stack.back());
            stack.pop_back();

            detail::SplitChoice split;
            if (node.depth < p.max_depth && node.rows.size() >= 2) split = find_split(node, grad, hess, p);

            TreeNode& out = tree[static_cast<std::size_t>(node.node_index)];
            if (!split.found) {
                out.feature = -1;
                out.weight = leaf_weight(node.sum_g, node.sum_h, p.lambda);
                continue;
            }
            out.feature = cols[split.column];
            out.threshold = split.threshold;
            out.default_left = split.default_left;
            out.left = static_cast<std::int32_t>(tree.size());
            out.right = out.left + 1;
            tree.emplace_back();
            tree.emplace_back();

            // Route rows: stored value < threshold goes left, everything
            // unstored follows the default direction.
            if (go_left_mark.size() < grad.size()) go_left_mark.resize(grad.size());
            for (std::int32_t r : node.rows)
                go_left_mark[static_cast<std::size_t>(r)] = split.default_left ? 1 : 0;
            for (const auto& e : node.columns[split.column])
                go_left_mark[static_cast<std::size_t>(e.row)] = e.value < split.threshold ? 1 : 0;

            detail::NodeData left, right;
            left.depth = right.depth = node.depth + 1;
            left.node_index = tree[static_cast<std::size_t>(node.node_index)].left;
            right.node_index = tree[static_cast<std::size_t>(node.node_index)].right;
            for (std::int32_t r : node.rows) {
                auto& side = go_left_mark[static_cast<std::size_t>(r)] ? left : right;
                side.rows.push_back(r);
                side.sum_g += grad[static_cast<std::size_t>(r)];
                side.sum_h += hess[static_cast<std::size_t>(r)];
            }
            left.columns.resize(node.columns.size());
            right.columns.resize(node.columns.size());
            for (std::size_t c = 0; c < node.columns.size(); ++c) {
                for (const auto& e : node.columns[c]) {
                    auto& side = go_left_mark[static_cast<std::size_t>(e.row)] ? left : right;
                    side.columns[c].push_back(e);
                }
            }
            stack.push_back(std::move(right));
            stack.push_back(std::move(left));
        }
        return tree;
    }

    // Exact greedy search over the stored values of each sampled column,
    // trying both default directions for the unstored rows. Scan order is
    // ascending column then ascending threshold, and only a strictly larger
    // gain replaces the incumbent, so ties resolve to the lowest feature
    // index and lowest threshold.
    static detail::SplitChoice find_split(const detail::NodeData& node, const std::vector<double>& grad,
                                          const std::vector<double>& hess, const BoosterParams& p) {
        detail::SplitChoice best;
        const double total_g = node.sum_g;
        const double total_h = node.sum_h;
        const auto total_n = static_cast<std::int64_t>(node.rows.size());

        auto consider = [&](std::size_t col, double thr, bool default_left, double gl, double hl,
                            std::int64_t nl) {
            const std::int64_t nr = total_n - nl;
            if (nl < 1 || nr < 1) return;
            const double gr = total_g - gl;
            const double hr = total_h - hl;
            if (hl < p.min_child_weight || hr < p.min_child_weight) return;
            const double gain = split_gain(gl, hl, gr, hr, p.lambda, p.gamma);
            if (gain > best.gain) best = {true, col, thr, default_left, gain};
        };

        for (std::size_t c = 0; c < node.columns.size(); ++c) {
            const auto& entries = node.columns[c];
            if (entries.empty()) continue;

            double present_g = 0.0, present_h = 0.0;
            for (const auto& e : entries) {
                present_g += grad[static_cast<std::size_t>(e.row)];
                present_h += hess[static_cast<std::size_t>(e.row)];
            }
            const auto present_n = static_cast<std::int64_t>(entries.size());
            const std::int64_t miss_n = total_n - present_n;
            const double miss_g = total_g - present_g;
            const double miss_h = total_h - present_h;

            double prefix_g = 0.0, prefix_h = 0.0;
            std::int64_t prefix_n = 0;
            for (std::size_t i = 0; i < entries.size(); ++i) {
                prefix_g += grad[static_cast<std::size_t>(entries[i].row)];
                prefix_h += hess[static_cast<std::size_t>(entries[i].row)];
                ++prefix_n;
                if (i + 1 < entries.size() && entries[i].value == entries[i + 1].value) continue;
                if (i + 1 < entries.size()) {
                    const double thr = 0.5 * (entries[i].value + entries[i + 1].value);
                    consider(c, thr, false, prefix_g, prefix_h, prefix_n);
                    if (miss_n > 0)
                        consider(c, thr, true, prefix_g + miss_g, prefix_h + miss_h, prefix_n + miss_n);
                } else if (miss_n > 0) {
                    // present vs missing: threshold above the largest stored value
                    consider(c, entries[i].value + 1.0, false, prefix_g, prefix_h, prefix_n);
                }
            }
        }
        return best;
    }
};

inline GbtModel fit(const SparseMatrix& x, std::span<const int> y, const BoosterParams& params) {
    return Booster::fit(x, y, params);
}

inline std::vector<double> predict_proba(const GbtModel& model, const SparseMatrix& x) {
    if (x.cols() != model.feature_count)
        throw std::invalid_argument("predict_proba: feature count mismatch");
    std::vector<double> out(static_cast<std::size_t>(x.rows()));
    for (std::int32_t r = 0; r < x.rows(); ++r)
        out[static_cast<std::size_t>(r)] = sigmoid(model.predict_row_margin(x.row(r)));
    return out;
}

inline std::vector<int> predict_label(const GbtModel& model, const SparseMatrix& x, double threshold = 0.5) {
    if (!(threshold > 0.0) || !(threshold < 1.0))
        throw std::invalid_argument("predict_label: threshold must be in (0, 1)");
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(x.rows()));
    for (double p : predict_proba(model, x)) out.push_back(p >= threshold ? 1 : 0);
    return out;
}

inline std::vector<int> labels_from_proba(std::span<const double> proba, double threshold = 0.5) {
    if (!(threshold > 0.0) || !(threshold < 1.0))
        throw std::invalid_argument("labels_from_proba: threshold must be in (0, 1)");
    std::vector<int> out;
    out.reserve(proba.size());
    for (double p : proba) out.push_back(p >= threshold ? 1 : 0);
    return out;
}

inline nlohmann::json params_to_json(const BoosterParams& p) {
    return nlohmann::json{{"learning_rate", p.learning_rate},
                          {"n_estimators", p.n_estimators},
                          {"max_depth", p.max_depth},
                          {"min_child_weight", p.min_child_weight},
                          {"gamma", p.gamma},
                          {"subsample", p.subsample},
                          {"colsample_bytree", p.colsample_bytree},
                          {"seed", p.seed},
                          {"lambda", p.lambda}};
}

inline BoosterParams params_from_json(const nlohmann::json& j) {
    BoosterParams p;
    p.learning_rate = j.at("learning_rate").get<double>();
    p.n_estimators = j.at("n_estimators").get<int>();
    p.max_depth = j.at("max_depth").get<int>();
    p.min_child_weight = j.at("min_child_weight").get<double>();
    p.gamma = j.at("gamma").get<double>();
    p.subsample = j.at("subsample").get<double>();
    p.colsample_bytree = j.at("colsample_bytree").get<double>();
    if (j.contains("seed")) p.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("lambda")) p.lambda = j.at("lambda").get<double>();
    return p;
}

// Pre-order node list per tree; node weights round-trip bit-exactly.
inline nlohmann::json model_to_json(const GbtModel& model) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : model.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : tree) {
            if (n.is_leaf()) {
                nodes.push_back({{"weight", n.weight}});
            } else {
                nodes.push_back({{"feature", n.feature},
                                 {"threshold", n.threshold},
                                 {"default_left", n.default_left},
                                 {"left", n.left},
                                 {"right", n.right}});
            }
        }
        trees.push_back(std::move(nodes));
    }
    return nlohmann::json{{"params", params_to_json(model.params)},
                          {"base_score", model.base_score},
                          {"feature_count", model.feature_count},
                          {"trees", std::move(trees)}};
}

inline GbtModel model_from_json(const nlohmann::json& j) {
    GbtModel model;
    model.params = params_from_json(j.at("params"));
    model.base_score = j.at("base_score").get<double>();
    model.feature_count = j.at("feature_count").get<std::int32_t>();
    for (const auto& tj : j.at("trees")) {
        Tree tree;
        for (const auto& nj : tj) {
            TreeNode n;
            if (nj.contains("weight")) {
                n.weight = nj.at("weight").get<double>();
            } else {
                n.feature = nj.at("feature").get<std::int32_t>();
                n.threshold = nj.at("threshold").get<double>();
                n.default_left = nj.at("default_left").get<bool>();
                n.left = nj.at("left").get<std::int32_t>();
                n.right = nj.at("right").get<std::int32_t>();
            }
            tree.push_back(n);
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

}  // namespace gaboost::gbt
