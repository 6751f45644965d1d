#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace gaboost::stats {

// Average ranks with tie groups sharing the mean rank; ranks sum to
// n(n+1)/2.
inline std::vector<double> rank_with_ties(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("rank_with_ties: empty input");
    std::vector<std::size_t> order(values.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

// Regularized upper incomplete gamma Q(a, x): series for x < a + 1, Lentz
// continued fraction otherwise.
inline double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q: requires x >= 0 and a > 0");
    if (x == 0.0) return 1.0;
    const double log_prefix = a * std::log(x) - x - std::lgamma(a);
    if (x < a + 1.0) {
        double term = 1.0 / a;
        double sum = term;
        double ap = a;
        for (int n = 0; n < 500; ++n) {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
        }
        return 1.0 - sum * std::exp(log_prefix);
    }
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int n = 1; n <= 500; ++n) {
        const double an = -static_cast<double>(n) * (static_cast<double>(n) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(log_prefix) * h;
}

inline double chi2_sf(double x, int df) {
    if (df < 1) throw std::invalid_argument("chi2_sf: df must be >= 1");
    if (x <= 0.0) return 1.0;
    return gamma_q(0.5 * df, 0.5 * x);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

struct WilcoxonResult {
    double statistic = 0.0;  // W = min(W+, W-)
    double p_value = 1.0;    // two-sided
    int n_used = 0;          // pairs remaining after zero differences are dropped
    bool exact = false;
};

namespace detail {

// Number of sign assignments whose rank sum is <= the observed statistic,
// counted over doubled ranks so tied (half-integer) ranks stay integral.
inline std::uint64_t wilcoxon_count_le(std::span<const double> ranks, double w_observed) {
    std::int64_t total2 = 0;
    std::vector<std::int64_t> doubled;
    doubled.reserve(ranks.size());
    for (double r : ranks) {
        doubled.push_back(std::llround(2.0 * r));
        total2 += doubled.back();
    }
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(total2) + 1, 0);
    counts[0] = 1;
    for (std::int64_t r2 : doubled)
        for (std::int64_t s = total2; s >= r2; --s)
            counts[static_cast<std::size_t>(s)] += counts[static_cast<std::size_t>(s - r2)];
    const auto limit = std::min<std::int64_t>(std::llround(2.0 * w_observed), total2);
    std::uint64_t below = 0;
    for (std::int64_t s = 0; s <= limit; ++s) below += counts[static_cast<std::size_t>(s)];
    return below;
}

}  // namespace detail

// Wilcoxon signed-rank test on paired samples. Zero differences are dropped
// (Wilcoxon's original treatment). Exact two-sided p over all 2^m sign
// assignments for m <= 25; otherwise the normal approximation with tie and
// continuity corrections.
inline WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("wilcoxon_signed_rank: paired samples of equal nonzero length required");
    std::vector<double> diffs;
    diffs.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d != 0.0) diffs.push_back(d);
    }
    if (diffs.empty())
        throw std::invalid_argument("wilcoxon_signed_rank: all differences are zero (no information)");

    std::vector<double> abs_diffs(diffs.size());
    for (std::size_t i = 0; i < diffs.size(); ++i) abs_diffs[i] = std::fabs(diffs[i]);
    const std::vector<double> ranks = rank_with_ties(abs_diffs);

    double w_plus = 0.0, w_minus = 0.0;
    for (std::size_t i = 0; i < diffs.size(); ++i) (diffs[i] > 0.0 ? w_plus : w_minus) += ranks[i];

    WilcoxonResult result;
    result.n_used = static_cast<int>(diffs.size());
    result.statistic = std::min(w_plus, w_minus);

    const auto m = static_cast<double>(diffs.size());
    if (diffs.size() <= 25) {
        result.exact = true;
        const std::uint64_t below = detail::wilcoxon_count_le(ranks, result.statistic);
        const double p = 2.0 * static_cast<double>(below) / std::pow(2.0, m);
        result.p_value = std::min(1.0, p);
        return result;
    }

    double tie_term = 0.0;
    {
        std::vector<double> sorted(abs_diffs);
        std::sort(sorted.begin(), sorted.end());
        std::size_t i = 0;
        while (i < sorted.size()) {
            std::size_t j = i;
            while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
            const auto t = static_cast<double>(j - i + 1);
            tie_term += t * t * t - t;
            i = j + 1;
        }
    }
    const double mean = m * (m + 1.0) / 4.0;
    const double variance = m * (m + 1.0) * (2.0 * m + 1.0) / 24.0 - tie_term / 48.0;
    if (variance <= 0.0) {
        result.p_value = 1.0;
        return result;
    }
    const double z = (result.statistic - mean + 0.5) / std::sqrt(variance);
    result.p_value = std::min(1.0, 2.0 * normal_cdf(z));
    return result;
}

struct KruskalResult {
    double statistic = 0.0;  // tie-corrected H
    double p_value = 1.0;
};

// Kruskal-Wallis rank test across three or more groups. H is tie-corrected;
// p comes from the chi-square survival function with df = groups - 1. When
// every value is identical the statistic is 0 and p is 1.
inline KruskalResult kruskal_wallis(std::span<const std::vector<double>> groups) {
    if (groups.size() < 3) throw std::invalid_argument("kruskal_wallis: needs at least 3 groups");
    std::vector<double> pooled;
    for (const auto& g : groups) {
        if (g.empty()) throw std::invalid_argument("kruskal_wallis: empty group");
        pooled.insert(pooled.end(), g.begin(), g.end());
    }
    const auto n_total = static_cast<double>(pooled.size());
    const std::vector<double> ranks = rank_with_ties(pooled);

    double h = 0.0;
    std::size_t offset = 0;
    for (const auto& g : groups) {
        double rank_sum = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) rank_sum += ranks[offset + i];
        offset += g.size();
        h += rank_sum * rank_sum / static_cast<double>(g.size());
    }
    h = 12.0 / (n_total * (n_total + 1.0)) * h - 3.0 * (n_total + 1.0);

    double tie_term = 0.0;
    {
        std::vector<double> sorted(pooled);
        std::sort(sorted.begin(), sorted.end());
        std::size_t i = 0;
        while (i < sorted.size()) {
            std::size_t j = i;
            while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
            const auto t = static_cast<double>(j - i + 1);
            tie_term += t * t * t - t;
            i = j + 1;
        }
    }
    const double correction = 1.0 - tie_term / (n_total * n_total * n_total - n_total);
    KruskalResult result;
    if (correction <= 0.0) return result;  // all values identical
    result.statistic = std::max(0.0, h / correction);
    result.p_value = chi2_sf(result.statistic, static_cast<int>(groups.size()) - 1);
    return result;
}

}  // namespace gaboost::stats
