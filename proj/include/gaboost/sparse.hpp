#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace gaboost {

struct SparseEntry {
    std::int32_t index;
    double value;
};

// Row-major sparse matrix (CSR). Only stored entries exist; everything else
// is absent, which downstream consumers may treat as zero or as missing.
// Entry indices are strictly increasing within each row.
class SparseMatrix {
public:
    SparseMatrix() = default;
    explicit SparseMatrix(std::int32_t cols) : cols_(cols) {}

    std::int32_t rows() const { return static_cast<std::int32_t>(offsets_.size()) - 1; }
    std::int32_t cols() const { return cols_; }
    std::size_t nnz() const { return entries_.size(); }

    void append_row(std::span<const SparseEntry> entries) {
        std::int32_t prev = -1;
        for (const auto& e : entries) {
            if (e.index <= prev || e.index >= cols_)
                throw std::invalid_argument("SparseMatrix: row indices must be strictly increasing and in range");
            prev = e.index;
            entries_.push_back(e);
        }
        offsets_.push_back(entries_.size());
    }

    std::span<const SparseEntry> row(std::int32_t r) const {
        return {entries_.data() + offsets_[static_cast<std::size_t>(r)],
                entries_.data() + offsets_[static_cast<std::size_t>(r) + 1]};
    }

    // Stored value at (r, c), or fallback when the entry is absent.
    double at(std::int32_t r, std::int32_t c, double fallback = 0.0) const {
        const auto rw = row(r);
        auto it = std::lower_bound(rw.begin(), rw.end(), c,
                                   [](const SparseEntry& e, std::int32_t idx) { return e.index < idx; });
        if (it != rw.end() && it->index == c) return it->value;
        return fallback;
    }

    // New matrix containing only the given columns (must be sorted, unique,
    // in range); kept entries are re-indexed by position in `columns`.
    SparseMatrix slice_columns(std::span<const std::int32_t> columns) const {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (columns[i] < 0 || columns[i] >= cols_)
                throw std::out_of_range("slice_columns: column index out of range");
            if (i > 0 && columns[i] <= columns[i - 1])
                throw std::invalid_argument("slice_columns: columns must be sorted and unique");
        }
        SparseMatrix out(static_cast<std::int32_t>(columns.size()));
        std::vector<SparseEntry> buf;
        for (std::int32_t r = 0; r < rows(); ++r) {
            buf.clear();
            const auto rw = row(r);
            std::size_t c = 0;
            for (const auto& e : rw) {
                while (c < columns.size() && columns[c] < e.index) ++c;
                if (c == columns.size()) break;
                if (columns[c] == e.index) buf.push_back({static_cast<std::int32_t>(c), e.value});
            }
            out.append_row(buf);
        }
        return out;
    }

    SparseMatrix slice_rows(std::span<const std::int32_t> row_ids) const {
        SparseMatrix out(cols_);
        for (std::int32_t r : row_ids) {
            if (r < 0 || r >= rows()) throw std::out_of_range("slice_rows: row index out of range");
            out.append_row(row(r));
        }
        return out;
    }

private:
    std::int32_t cols_ = 0;
    std::vector<std::size_t> offsets_{0};
    std::vector<SparseEntry> entries_;
};

class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::int32_t rows, std::int32_t cols)
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0) {}

    std::int32_t rows() const { return rows_; }
    std::int32_t cols() const { return cols_; }

    double& operator()(std::int32_t r, std::int32_t c) {
        return data_[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(c)];
    }
    double operator()(std::int32_t r, std::int32_t c) const {
        return data_[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(c)];
    }

    std::span<const double> row(std::int32_t r) const {
        return {data_.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_),
                static_cast<std::size_t>(cols_)};
    }

private:
    std::int32_t rows_ = 0;
    std::int32_t cols_ = 0;
    std::vector<double> data_;
};

// Every entry stored explicitly, so boosters see no missing values.
inline SparseMatrix to_sparse_all(const DenseMatrix& d) {
    SparseMatrix out(d.cols());
    std::vector<SparseEntry> buf(static_cast<std::size_t>(d.cols()));
    for (std::int32_t r = 0; r < d.rows(); ++r) {
        for (std::int32_t c = 0; c < d.cols(); ++c) buf[static_cast<std::size_t>(c)] = {c, d(r, c)};
        out.append_row(buf);
    }
    return out;
}

}  // namespace gaboost
