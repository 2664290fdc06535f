#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pushnet/error.hpp"

namespace pushnet {

/// Row-major matrix of doubles. Used for features, hidden representations
/// and layer weights.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw DomainError("dense matrix: data size does not match shape");
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_shape(const DenseMatrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline void check_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* what) {
    if (!a.same_shape(b)) {
        throw DomainError(std::string(what) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()) + ")");
    }
}

// C = A * B. Zero entries of A are skipped, which makes this cheap for the
// bag-of-words inputs the models see in practice.
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) throw DomainError("matmul: inner dimensions differ");
    DenseMatrix c(a.rows(), b.cols());
    const std::size_t m = b.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* out = c.row(i).data();
        const auto arow = a.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double v = arow[k];
            if (v == 0.0) continue;
            const double* brow = b.row(k).data();
            for (std::size_t j = 0; j < m; ++j) out[j] += v * brow[j];
        }
    }
    return c;
}

// C = A^T * B
inline DenseMatrix matmul_transposed_lhs(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows()) throw DomainError("matmul_transposed_lhs: row counts differ");
    DenseMatrix c(a.cols(), b.cols());
    const std::size_t m = b.cols();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const auto arow = a.row(r);
        const double* brow = b.row(r).data();
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double v = arow[i];
            if (v == 0.0) continue;
            double* out = c.row(i).data();
            for (std::size_t j = 0; j < m; ++j) out[j] += v * brow[j];
        }
    }
    return c;
}

// C = A * B^T
inline DenseMatrix matmul_transposed_rhs(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.cols()) throw DomainError("matmul_transposed_rhs: column counts differ");
    DenseMatrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row(i).data();
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* brow = b.row(j).data();
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += arow[k] * brow[k];
            c(i, j) = s;
        }
    }
    return c;
}

inline DenseMatrix hconcat(std::span<const DenseMatrix> blocks) {
    if (blocks.empty()) return {};
    const std::size_t rows = blocks.front().rows();
    std::size_t cols = 0;
    for (const auto& b : blocks) {
        if (b.rows() != rows) throw DomainError("hconcat: row counts differ");
        cols += b.cols();
    }
    DenseMatrix out(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        std::size_t offset = 0;
        for (const auto& b : blocks) {
            const auto src = b.row(i);
            std::copy(src.begin(), src.end(), out.row(i).begin() + static_cast<std::ptrdiff_t>(offset));
            offset += b.cols();
        }
    }
    return out;
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    check_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

inline bool all_finite(const DenseMatrix& a) {
    return std::all_of(a.data().begin(), a.data().end(), [](double v) { return std::isfinite(v); });
}

/// Divides every row by its L1 norm. Zero rows are left unchanged.
inline DenseMatrix l1_normalize_features(const DenseMatrix& x) {
    DenseMatrix out = x;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        auto r = out.row(i);
        double sum = 0.0;
        for (double v : r) {
            if (v < 0.0 || std::isnan(v)) {
                throw DomainError("l1_normalize_features: negative entry in row " + std::to_string(i));
            }
            sum += v;
        }
        if (sum == 0.0) continue;
        for (double& v : r) v /= sum;
    }
    return out;
}

} // namespace pushnet
