#pragma once

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "gaboost/corpus.hpp"
#include "gaboost/rng.hpp"
#include "gaboost/sparse.hpp"

namespace synth {

struct NumericSet {
    gaboost::SparseMatrix x;
    std::vector<int> y;
};

// Linearly separable set with a margin: label = sign(w . x) with rows whose
// margin is too small resampled. All entries stored.
inline NumericSet separable_set(std::int32_t rows, std::int32_t dims, std::uint64_t seed,
                                double min_margin = 0.3) {
    gaboost::Rng rng(seed);
    std::vector<double> w(static_cast<std::size_t>(dims));
    for (auto& v : w) v = rng.uniform(-1.0, 1.0);

    NumericSet out;
    out.x = gaboost::SparseMatrix(dims);
    std::vector<gaboost::SparseEntry> row(static_cast<std::size_t>(dims));
    while (out.x.rows() < rows) {
        double score = 0.0;
        for (std::int32_t d = 0; d < dims; ++d) {
            const double v = rng.uniform(-1.0, 1.0);
            row[static_cast<std::size_t>(d)] = {d, v};
            score += w[static_cast<std::size_t>(d)] * v;
        }
        if (score > -min_margin && score < min_margin) continue;
        out.x.append_row(row);
        out.y.push_back(score > 0.0 ? 1 : 0);
    }
    // Guarantee both classes.
    if (out.y.front() == out.y.back()) {
        bool has0 = false, has1 = false;
        for (int v : out.y) (v ? has1 : has0) = true;
        if (!has0 || !has1) {
            out.y.front() = 1 - out.y.front();
        }
    }
    return out;
}

// Sparse text-like corpus where the first `informative` features carry the
// class signal. Positive rows activate a few informative features; every row
// carries random noise features. A booster restricted to noise features can
// only predict the majority class.
inline gaboost::corpus::LabeledDataset ga_corpus(std::int32_t rows, std::int32_t vocab_size,
                                                 std::int32_t informative, double positive_rate,
                                                 std::uint64_t seed) {
    gaboost::Rng rng(seed);
    gaboost::corpus::LabeledDataset ds;
    ds.positive_label_name = "Spam";
    ds.matrix = gaboost::SparseMatrix(vocab_size);
    for (std::int32_t v = 0; v < vocab_size; ++v) {
        std::ostringstream term;
        term << "t" << v;
        ds.vocabulary.index.emplace(term.str(), v);
        ds.vocabulary.terms.push_back(term.str());
        ds.vocabulary.doc_freq.push_back(1);
    }

    std::vector<gaboost::SparseEntry> row;
    for (std::int32_t r = 0; r < rows; ++r) {
        const int label = rng.unit() < positive_rate ? 1 : 0;
        ds.labels.push_back(label);
        row.clear();
        if (label == 1) {
            const auto picks = rng.sample_without_replacement(informative, 3);
            for (auto f : picks) row.push_back({f, rng.uniform(0.5, 1.0)});
        }
        const auto noise_count = static_cast<std::int32_t>(rng.uniform_int(8, 15));
        auto noise = rng.sample_without_replacement(vocab_size - informative, noise_count);
        for (auto f : noise) row.push_back({f + informative, rng.uniform(0.1, 1.0)});
        std::sort(row.begin(), row.end(),
                  [](const gaboost::SparseEntry& a, const gaboost::SparseEntry& b) { return a.index < b.index; });
        ds.matrix.append_row(row);
    }
    // Both classes must appear for stratified splits to make sense.
    bool has0 = false, has1 = false;
    for (int v : ds.labels) (v ? has1 : has0) = true;
    if (!has0) ds.labels.front() = 0;
    if (!has1) ds.labels.front() = 1;
    return ds;
}

// Small text corpus as a CSV string: spam rows reuse a spammy lexicon, ham
// rows a neutral one, with shared filler words.
inline std::string text_corpus_csv(std::int32_t rows, std::uint64_t seed) {
    static const std::vector<std::string> spam_words = {"free",  "winner", "prize", "claim",
                                                        "cash",  "urgent", "offer", "click"};
    static const std::vector<std::string> ham_words = {"lunch", "meeting", "tomorrow", "thanks",
                                                       "report", "weekend", "family", "coffee"};
    static const std::vector<std::string> filler = {"the", "a", "to", "and", "you", "we", "of"};

    gaboost::Rng rng(seed);
    std::ostringstream out;
    out << "text,label\n";
    for (std::int32_t r = 0; r < rows; ++r) {
        const bool spam = rng.unit() < 0.25;
        const auto& lex = spam ? spam_words : ham_words;
        std::ostringstream text;
        const int n_words = static_cast<int>(rng.uniform_int(4, 9));
        for (int w = 0; w < n_words; ++w) {
            if (w) text << ' ';
            if (rng.unit() < 0.55)
                text << lex[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(lex.size()) - 1))];
            else
                text << filler[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(filler.size()) - 1))];
        }
        out << '"' << text.str() << "\"," << (spam ? "Spam" : "Ham") << '\n';
    }
    return out.str();
}

}  // namespace synth
