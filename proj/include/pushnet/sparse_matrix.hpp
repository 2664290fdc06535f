#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pushnet/dense_matrix.hpp"
#include "pushnet/error.hpp"

namespace pushnet {

using Index = std::uint32_t;

struct Triplet {
    Index row;
    Index col;
    double value;
};

/// Compressed sparse row matrix.
///
/// Invariants: row_offsets has rows+1 nondecreasing entries starting at 0,
/// column indices are strictly increasing within a row, and every stored
/// value is finite. Explicit zeros are allowed but never produced by the
/// builders in this library.
class SparseMatrix {
public:
    SparseMatrix() : row_offsets_(1, 0) {}

    SparseMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), row_offsets_(rows + 1, 0) {}

    SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_offsets,
                 std::vector<Index> col_indices, std::vector<double> values)
        : rows_(rows),
          cols_(cols),
          row_offsets_(std::move(row_offsets)),
          col_indices_(std::move(col_indices)),
          values_(std::move(values)) {
        validate();
    }

    /// Builds a matrix from unordered triplets. Duplicate coordinates are summed.
    static SparseMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets) {
        for (const auto& t : triplets) {
            if (t.row >= rows || t.col >= cols) throw DomainError("sparse matrix: triplet out of range");
        }
        std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
            return a.row != b.row ? a.row < b.row : a.col < b.col;
        });
        std::vector<std::size_t> offsets(rows + 1, 0);
        std::vector<Index> cols_out;
        std::vector<double> vals_out;
        cols_out.reserve(triplets.size());
        vals_out.reserve(triplets.size());
        for (std::size_t k = 0; k < triplets.size();) {
            const auto& t = triplets[k];
            double v = t.value;
            std::size_t next = k + 1;
            while (next < triplets.size() && triplets[next].row == t.row && triplets[next].col == t.col) {
                v += triplets[next].value;
                ++next;
            }
            cols_out.push_back(t.col);
            vals_out.push_back(v);
            ++offsets[t.row + 1];
            k = next;
        }
        for (std::size_t r = 0; r < rows; ++r) offsets[r + 1] += offsets[r];
        return SparseMatrix(rows, cols, std::move(offsets), std::move(cols_out), std::move(vals_out));
    }

    static SparseMatrix identity(std::size_t n) {
        std::vector<std::size_t> offsets(n + 1);
        std::vector<Index> cols(n);
        for (std::size_t i = 0; i <= n; ++i) offsets[i] = i;
        for (std::size_t i = 0; i < n; ++i) cols[i] = static_cast<Index>(i);
        return SparseMatrix(n, n, std::move(offsets), std::move(cols), std::vector<double>(n, 1.0));
    }

    static SparseMatrix from_dense(const DenseMatrix& d) {
        std::vector<Triplet> t;
        for (std::size_t i = 0; i < d.rows(); ++i) {
            for (std::size_t j = 0; j < d.cols(); ++j) {
                if (d(i, j) != 0.0) t.push_back({static_cast<Index>(i), static_cast<Index>(j), d(i, j)});
            }
        }
        return from_triplets(d.rows(), d.cols(), std::move(t));
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t nnz() const noexcept { return values_.size(); }

    const std::vector<std::size_t>& row_offsets() const noexcept { return row_offsets_; }
    const std::vector<Index>& col_indices() const noexcept { return col_indices_; }
    const std::vector<double>& values() const noexcept { return values_; }
    std::vector<double>& mutable_values() noexcept { return values_; }

    std::span<const Index> row_indices(std::size_t r) const noexcept {
        return {col_indices_.data() + row_offsets_[r], row_offsets_[r + 1] - row_offsets_[r]};
    }
    std::span<const double> row_values(std::size_t r) const noexcept {
        return {values_.data() + row_offsets_[r], row_offsets_[r + 1] - row_offsets_[r]};
    }
    std::size_t row_length(std::size_t r) const noexcept { return row_offsets_[r + 1] - row_offsets_[r]; }

    /// Stored value at (r, c), or 0 when the entry is not stored.
    double value(std::size_t r, std::size_t c) const noexcept {
        const auto idx = row_indices(r);
        const auto it = std::lower_bound(idx.begin(), idx.end(), static_cast<Index>(c));
        if (it == idx.end() || *it != c) return 0.0;
        return values_[row_offsets_[r] + static_cast<std::size_t>(it - idx.begin())];
    }

    bool contains(std::size_t r, std::size_t c) const noexcept {
        const auto idx = row_indices(r);
        return std::binary_search(idx.begin(), idx.end(), static_cast<Index>(c));
    }

    SparseMatrix transpose() const {
        std::vector<std::size_t> offsets(cols_ + 1, 0);
        for (Index c : col_indices_) ++offsets[c + 1];
        for (std::size_t c = 0; c < cols_; ++c) offsets[c + 1] += offsets[c];
        std::vector<Index> out_cols(nnz());
        std::vector<double> out_vals(nnz());
        std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
        for (std::size_t r = 0; r < rows_; ++r) {
            for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
                const std::size_t dst = cursor[col_indices_[k]]++;
                out_cols[dst] = static_cast<Index>(r);
                out_vals[dst] = values_[k];
            }
        }
        return SparseMatrix(cols_, rows_, std::move(offsets), std::move(out_cols), std::move(out_vals));
    }

    DenseMatrix to_dense() const {
        DenseMatrix d(rows_, cols_);
        for (std::size_t r = 0; r < rows_; ++r) {
            for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) d(r, col_indices_[k]) = values_[k];
        }
        return d;
    }

    /// Same sparsity pattern, new values.
    SparseMatrix with_values(std::vector<double> values) const {
        if (values.size() != nnz()) throw DomainError("sparse matrix: value count does not match pattern");
        return SparseMatrix(rows_, cols_, row_offsets_, col_indices_, std::move(values));
    }

    friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

private:
    void validate() const {
        if (row_offsets_.size() != rows_ + 1) throw DomainError("sparse matrix: row_offsets must have rows+1 entries");
        if (row_offsets_.front() != 0) throw DomainError("sparse matrix: row_offsets[0] must be 0");
        if (row_offsets_.back() != col_indices_.size() || col_indices_.size() != values_.size()) {
            throw DomainError("sparse matrix: row_offsets[rows] must equal nnz");
        }
        if (rows_ > std::numeric_limits<Index>::max() || cols_ > std::numeric_limits<Index>::max()) {
            throw DomainError("sparse matrix: dimension exceeds index range");
        }
        for (std::size_t r = 0; r < rows_; ++r) {
            if (row_offsets_[r] > row_offsets_[r + 1]) throw DomainError("sparse matrix: row_offsets must be nondecreasing");
            for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
                if (col_indices_[k] >= cols_) throw DomainError("sparse matrix: column index out of range");
                if (k > row_offsets_[r] && col_indices_[k] <= col_indices_[k - 1]) {
                    throw DomainError("sparse matrix: column indices must be strictly increasing in row " +
                                      std::to_string(r));
                }
                if (!std::isfinite(values_[k])) throw DomainError("sparse matrix: non-finite value");
            }
        }
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_offsets_;
    std::vector<Index> col_indices_;
    std::vector<double> values_;
};

/// Scales every nonempty row to unit sum. All-zero rows are left unchanged.
inline SparseMatrix row_l1_normalize(const SparseMatrix& m) {
    std::vector<double> vals = m.values();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const std::size_t begin = m.row_offsets()[r];
        const std::size_t end = m.row_offsets()[r + 1];
        double sum = 0.0;
        for (std::size_t k = begin; k < end; ++k) {
            if (vals[k] < 0.0) throw DomainError("row_l1_normalize: negative value in row " + std::to_string(r));
            sum += vals[k];
        }
        if (sum == 0.0 || sum == 1.0) continue;
        for (std::size_t k = begin; k < end; ++k) vals[k] /= sum;
    }
    return m.with_values(std::move(vals));
}

/// Entrywise sum; the result's pattern is the union of the input patterns.
inline SparseMatrix sparse_add(const SparseMatrix& a, const SparseMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw DomainError("sparse_add: shape mismatch");
    std::vector<std::size_t> offsets(a.rows() + 1, 0);
    std::vector<Index> cols;
    std::vector<double> vals;
    cols.reserve(a.nnz() + b.nnz());
    vals.reserve(a.nnz() + b.nnz());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const auto ai = a.row_indices(r);
        const auto av = a.row_values(r);
        const auto bi = b.row_indices(r);
        const auto bv = b.row_values(r);
        std::size_t x = 0, y = 0;
        while (x < ai.size() || y < bi.size()) {
            if (y == bi.size() || (x < ai.size() && ai[x] < bi[y])) {
                cols.push_back(ai[x]);
                vals.push_back(av[x++]);
            } else if (x == ai.size() || bi[y] < ai[x]) {
                cols.push_back(bi[y]);
                vals.push_back(bv[y++]);
            } else {
                cols.push_back(ai[x]);
                vals.push_back(av[x++] + bv[y++]);
            }
        }
        offsets[r + 1] = cols.size();
    }
    return SparseMatrix(a.rows(), a.cols(), std::move(offsets), std::move(cols), std::move(vals));
}

} // namespace pushnet
