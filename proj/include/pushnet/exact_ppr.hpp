#pragma once

#include <cmath>
#include <cstddef>
#include <utility>

#include "pushnet/dense_matrix.hpp"
#include "pushnet/error.hpp"
#include "pushnet/sparse_matrix.hpp"

namespace pushnet {

/// Exact PPR matrix Pi, the solution of Pi = alpha I + (1 - alpha) Pi W,
/// obtained as alpha (I - (1 - alpha) W)^{-1} by Gauss-Jordan elimination with
/// partial pivoting. Dense, O(n^3); meant for verification on small graphs.
inline DenseMatrix exact_ppr_oracle(const SparseMatrix& w, double alpha, std::size_t max_nodes = 1000) {
    if (w.rows() != w.cols()) throw DomainError("exact_ppr_oracle: weight matrix must be square");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("exact_ppr_oracle: alpha must lie in (0, 1)");
    const std::size_t n = w.rows();
    if (n > max_nodes) throw DomainError("exact_ppr_oracle: graph too large for a dense solve");

    DenseMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) a(i, i) = 1.0;
    for (std::size_t r = 0; r < n; ++r) {
        const auto idx = w.row_indices(r);
        const auto val = w.row_values(r);
        for (std::size_t e = 0; e < idx.size(); ++e) a(r, idx[e]) -= (1.0 - alpha) * val[e];
    }
    DenseMatrix inv(n, n);
    for (std::size_t i = 0; i < n; ++i) inv(i, i) = alpha;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        }
        if (std::abs(a(pivot, col)) < 1e-300) throw NumericalError("exact_ppr_oracle: singular system");
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) {
                std::swap(a(pivot, c), a(col, c));
                std::swap(inv(pivot, c), inv(col, c));
            }
        }
        const double d = a(col, col);
        for (std::size_t c = 0; c < n; ++c) {
            a(col, c) /= d;
            inv(col, c) /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a(r, col);
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < n; ++c) {
                a(r, c) -= f * a(col, c);
                inv(r, c) -= f * inv(col, c);
            }
        }
    }
    return inv;
}

} // namespace pushnet
