#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gaboost/csv.hpp"
#include "gaboost/porter.hpp"
#include "gaboost/sparse.hpp"

namespace gaboost::corpus {

struct Document {
    std::string text;
    std::string label;
};

// Input byte encoding. Tokens are restricted to ASCII [a-z0-9-] either way,
// so both encodings tokenize identically; the flag is recorded for reports.
enum class Encoding { Latin1, Utf8 };

inline std::string_view encoding_name(Encoding e) {
    return e == Encoding::Latin1 ? "iso-8859-1" : "utf-8";
}

enum class IdfVariant { Smooth, Plain };

inline std::string_view idf_name(IdfVariant v) {
    return v == IdfVariant::Smooth ? "smooth" : "plain";
}

struct Vocabulary {
    std::vector<std::string> terms;      // index -> term, lexicographic
    std::vector<std::int64_t> doc_freq;  // index -> number of docs containing the term
    std::unordered_map<std::string, std::int32_t> index;

    std::int32_t size() const { return static_cast<std::int32_t>(terms.size()); }

    std::int32_t find(std::string_view term) const {
        auto it = index.find(std::string(term));
        return it == index.end() ? -1 : it->second;
    }
};

struct LabeledDataset {
    SparseMatrix matrix;
    std::vector<int> labels;  // 0 / 1
    Vocabulary vocabulary;
    std::string positive_label_name;

    std::int32_t rows() const { return matrix.rows(); }
    std::int32_t features() const { return matrix.cols(); }

    double positive_fraction() const {
        if (labels.empty()) return 0.0;
        std::int64_t pos = 0;
        for (int y : labels) pos += y;
        return static_cast<double>(pos) / static_cast<double>(labels.size());
    }
};

// Split on any byte outside [A-Za-z0-9-], lowercase, drop empties. '@' acts
// as a separator, so "@user" yields "user". Stop words are not filtered.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-';
        if (keep) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

inline std::vector<std::string> stemmed_tokens(std::string_view text) {
    auto tokens = tokenize(text);
    for (auto& t : tokens) t = porter_stem(t);
    return tokens;
}

inline std::vector<Document> load_csv(const std::string& path, const std::string& text_col,
                                      const std::string& label_col, const std::string& negative_label,
                                      const std::string& positive_label) {
    const CsvTable table = read_csv(path);
    const std::size_t ti = table.column(text_col);
    const std::size_t li = table.column(label_col);
    std::vector<Document> docs;
    docs.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string& text = row[ti];
        const std::string& label = row[li];
        if (text.empty())
            throw std::runtime_error("row " + std::to_string(r + 1) + ": empty text");
        if (label != negative_label && label != positive_label)
            throw std::runtime_error("row " + std::to_string(r + 1) + ": label '" + label +
                                     "' is not one of '" + negative_label + "'/'" + positive_label + "'");
        docs.push_back({text, label});
    }
    return docs;
}

// Feature indices are assigned lexicographically over the stemmed terms, so
// the index space is stable for a given corpus. df counts documents, not
// occurrences. No max-feature cap.
inline Vocabulary fit_vocabulary(std::span<const Document> docs) {
    if (docs.empty()) throw std::invalid_argument("fit_vocabulary: empty corpus");
    std::map<std::string, std::int64_t> df;
    std::vector<std::string> seen;
    for (const auto& doc : docs) {
        seen = stemmed_tokens(doc.text);
        std::sort(seen.begin(), seen.end());
        seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
        for (auto& t : seen) ++df[t];
    }
    Vocabulary vocab;
    vocab.terms.reserve(df.size());
    vocab.doc_freq.reserve(df.size());
    for (auto& [term, count] : df) {
        vocab.index.emplace(term, static_cast<std::int32_t>(vocab.terms.size()));
        vocab.terms.push_back(term);
        vocab.doc_freq.push_back(count);
    }
    return vocab;
}

// weight(t, d) = tf * idf, tf = raw count, idf per `variant`:
//   smooth: ln((1 + N) / (1 + df)) + 1
//   plain:  ln(N / df)
// followed by L2 normalization of each nonzero row. Out-of-vocabulary
// tokens are dropped.
inline SparseMatrix tfidf_transform(std::span<const Document> docs, const Vocabulary& vocab,
                                    IdfVariant variant = IdfVariant::Smooth) {
    const auto n = static_cast<double>(docs.size());
    std::vector<double> idf(static_cast<std::size_t>(vocab.size()));
    for (std::int32_t i = 0; i < vocab.size(); ++i) {
        const auto df = static_cast<double>(vocab.doc_freq[static_cast<std::size_t>(i)]);
        idf[static_cast<std::size_t>(i)] =
            variant == IdfVariant::Smooth ? std::log((1.0 + n) / (1.0 + df)) + 1.0 : std::log(n / df);
    }

    SparseMatrix matrix(vocab.size());
    std::map<std::int32_t, double> counts;
    std::vector<SparseEntry> row;
    for (const auto& doc : docs) {
        counts.clear();
        for (const auto& token : stemmed_tokens(doc.text)) {
            const std::int32_t idx = vocab.find(token);
            if (idx >= 0) counts[idx] += 1.0;
        }
        row.clear();
        double norm_sq = 0.0;
        for (const auto& [idx, tf] : counts) {
            const double w = tf * idf[static_cast<std::size_t>(idx)];
            row.push_back({idx, w});
            norm_sq += w * w;
        }
        if (norm_sq > 0.0) {
            const double inv = 1.0 / std::sqrt(norm_sq);
            for (auto& e : row) e.value *= inv;
        }
        matrix.append_row(row);
    }
    return matrix;
}

inline std::vector<int> encode_labels(std::span<const Document> docs, const std::string& positive_label) {
    std::vector<int> labels;
    labels.reserve(docs.size());
    for (const auto& doc : docs) labels.push_back(doc.label == positive_label ? 1 : 0);
    return labels;
}

inline LabeledDataset build_dataset(std::span<const Document> docs, const std::string& positive_label,
                                    IdfVariant variant = IdfVariant::Smooth) {
    LabeledDataset ds;
    ds.vocabulary = fit_vocabulary(docs);
    ds.matrix = tfidf_transform(docs, ds.vocabulary, variant);
    ds.labels = encode_labels(docs, positive_label);
    ds.positive_label_name = positive_label;
    return ds;
}

// On-disk dump: header line "rows cols", then one line per row of
// space-separated index:weight pairs at 6 significant digits.
inline std::string format_matrix_dump(const SparseMatrix& m) {
    std::ostringstream out;
    out << m.rows() << ' ' << m.cols() << '\n';
    for (std::int32_t r = 0; r < m.rows(); ++r) {
        bool first = true;
        for (const auto& e : m.row(r)) {
            if (!first) out << ' ';
            out << e.index << ':' << fmt_g(e.value, 6);
            first = false;
        }
        out << '\n';
    }
    return out.str();
}

inline std::string format_vocab_tsv(const Vocabulary& vocab) {
    std::ostringstream out;
    for (std::int32_t i = 0; i < vocab.size(); ++i)
        out << i << '\t' << vocab.terms[static_cast<std::size_t>(i)] << '\t'
            << vocab.doc_freq[static_cast<std::size_t>(i)] << '\n';
    return out.str();
}

}  // namespace gaboost::corpus
