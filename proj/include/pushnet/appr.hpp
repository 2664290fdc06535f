#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pushnet/dataset.hpp"
#include "pushnet/error.hpp"
#include "pushnet/graph.hpp"
#include "pushnet/parallel.hpp"
#include "pushnet/sparse_matrix.hpp"

namespace pushnet {

struct ApprParams {
    double alpha = 0.1;     // restart probability
    double epsilon = 1e-5;  // residual threshold
    std::size_t max_pushes = 10'000'000;  // per column

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("appr: alpha must lie in (0, 1)");
        if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw DomainError("appr: epsilon must be positive");
        if (max_pushes < 1) throw DomainError("appr: max_pushes must be at least 1");
    }
};

/// Approximate PPR contributions of every source to a single target.
struct ApprColumn {
    NodeId target = 0;
    // (source, estimate) with estimate > 0, sorted by source.
    std::vector<std::pair<NodeId, double>> entries;
    double residual_norm_at_exit = 0.0;  // max residual left behind
    std::size_t pushes = 0;
    bool converged = true;

    double estimate(NodeId s) const noexcept {
        const auto it = std::lower_bound(entries.begin(), entries.end(), s,
                                         [](const auto& e, NodeId v) { return e.first < v; });
        return it != entries.end() && it->first == s ? it->second : 0.0;
    }
};

/// Rows of P are source importance vectors: P(s, t) approximates the PPR
/// value of t for a walk restarting at s.
struct ApprMatrix {
    double alpha = 0.0;
    double epsilon = 0.0;
    SparseMatrix matrix;
    std::size_t nonconverged_columns = 0;
    std::size_t total_pushes = 0;

    bool converged() const noexcept { return nonconverged_columns == 0; }
};

/// The weights a push at node i sends along: the pairs (j, w(j, i)), i.e.
/// column i of the weight matrix, stored as row i of its transpose.
class PushOperator {
public:
    explicit PushOperator(const SparseMatrix& w) {
        if (w.rows() != w.cols()) throw DomainError("push operator: weight matrix must be square");
        for (double v : w.values()) {
            if (v < 0.0) throw DomainError("push operator: weights must be nonnegative");
        }
        by_sender_ = w.transpose();
    }

    std::size_t size() const noexcept { return by_sender_.rows(); }
    std::span<const Index> receivers(NodeId i) const noexcept { return by_sender_.row_indices(i); }
    std::span<const double> weights(NodeId i) const noexcept { return by_sender_.row_values(i); }

private:
    SparseMatrix by_sender_;
};

namespace detail {

struct ResidualEntry {
    double value;
    NodeId node;
};

// Max-heap order on residual value; equal values pop the smaller node id first.
struct ResidualLess {
    bool operator()(const ResidualEntry& a, const ResidualEntry& b) const noexcept {
        if (a.value != b.value) return a.value < b.value;
        return a.node > b.node;
    }
};

using ResidualQueue = std::priority_queue<ResidualEntry, std::vector<ResidualEntry>, ResidualLess>;

// Dense scratch reused across columns so that one column costs time
// proportional to the nodes it touches, not to n.
struct PushWorkspace {
    std::vector<double> estimate;
    std::vector<double> residual;
    std::vector<char> touched_flag;
    std::vector<NodeId> touched;

    explicit PushWorkspace(std::size_t n) : estimate(n, 0.0), residual(n, 0.0), touched_flag(n, 0) {}

    void touch(NodeId i) {
        if (!touched_flag[i]) {
            touched_flag[i] = 1;
            touched.push_back(i);
        }
    }

    void reset() {
        for (NodeId i : touched) {
            estimate[i] = 0.0;
            residual[i] = 0.0;
            touched_flag[i] = 0;
        }
        touched.clear();
    }
};

inline ApprColumn reverse_push(const PushOperator& op, NodeId k, const ApprParams& params, PushWorkspace& ws) {
    ApprColumn col;
    col.target = k;
    const double alpha = params.alpha;
    const double eps = params.epsilon;

    ResidualQueue queue;
    ws.touch(k);
    ws.residual[k] = 1.0;
    if (1.0 > eps) queue.push({1.0, k});

    while (!queue.empty()) {
        const ResidualEntry top = queue.top();
        if (ws.residual[top.node] != top.value) {
            queue.pop();
            continue;
        }
        if (col.pushes >= params.max_pushes) {
            col.converged = false;
            break;
        }
        queue.pop();
        const NodeId i = top.node;
        const double rho = ws.residual[i];
        // Reset before distributing so mass sent along a self-loop is kept.
        ws.residual[i] = 0.0;
        ws.estimate[i] += alpha * rho;
        ++col.pushes;
        const auto recv = op.receivers(i);
        const auto wts = op.weights(i);
        for (std::size_t e = 0; e < recv.size(); ++e) {
            const NodeId j = recv[e];
            ws.touch(j);
            ws.residual[j] += (1.0 - alpha) * wts[e] * rho;
            if (ws.residual[j] > eps) queue.push({ws.residual[j], j});
        }
    }

    std::sort(ws.touched.begin(), ws.touched.end());
    for (NodeId s : ws.touched) {
        if (ws.estimate[s] > 0.0) col.entries.emplace_back(s, ws.estimate[s]);
        col.residual_norm_at_exit = std::max(col.residual_norm_at_exit, ws.residual[s]);
    }
    ws.reset();
    return col;
}

} // namespace detail

/// Reverse local push towards target k on weight matrix w. Under random-walk
/// weights every returned estimate is within epsilon of the exact PPR value.
/// A column that hits max_pushes is returned with converged = false.
inline ApprColumn reverse_push_column(const PushOperator& op, NodeId k, const ApprParams& params) {
    params.validate();
    if (k >= op.size()) throw DomainError("reverse_push_column: target " + std::to_string(k) + " out of range");
    detail::PushWorkspace ws(op.size());
    return detail::reverse_push(op, k, params, ws);
}

inline ApprColumn reverse_push_column(const SparseMatrix& w, NodeId k, const ApprParams& params) {
    return reverse_push_column(PushOperator(w), k, params);
}

/// Runs reverse push for every target and assembles the row-major matrix.
/// The result does not depend on the number of workers.
inline ApprMatrix build_appr_matrix(const SparseMatrix& w, const ApprParams& params, std::size_t workers = 1) {
    params.validate();
    const PushOperator op(w);
    const std::size_t n = op.size();
    std::vector<ApprColumn> columns(n);
    parallel_for_ranges(n, workers, [&](std::size_t begin, std::size_t end) {
        detail::PushWorkspace ws(n);
        for (std::size_t k = begin; k < end; ++k) columns[k] = detail::reverse_push(op, static_cast<NodeId>(k), params, ws);
    });

    // Columns become rows of P^T; one transpose yields P.
    ApprMatrix out;
    out.alpha = params.alpha;
    out.epsilon = params.epsilon;
    std::vector<std::size_t> offsets(n + 1, 0);
    for (std::size_t k = 0; k < n; ++k) offsets[k + 1] = offsets[k] + columns[k].entries.size();
    std::vector<Index> idx;
    std::vector<double> vals;
    idx.reserve(offsets.back());
    vals.reserve(offsets.back());
    for (auto& c : columns) {
        for (const auto& [s, v] : c.entries) {
            idx.push_back(s);
            vals.push_back(v);
        }
        out.nonconverged_columns += c.converged ? 0 : 1;
        out.total_pushes += c.pushes;
        c.entries = {};
    }
    out.matrix = SparseMatrix(n, n, std::move(offsets), std::move(idx), std::move(vals)).transpose();
    return out;
}

/// Elementwise sum over scales; the pattern is the union of the input patterns.
inline SparseMatrix sum_scales(std::span<const ApprMatrix> mats) {
    if (mats.empty()) throw DomainError("sum_scales: no matrices");
    SparseMatrix acc = mats.front().matrix;
    for (std::size_t k = 1; k < mats.size(); ++k) {
        if (mats[k].matrix.rows() != acc.rows() || mats[k].matrix.cols() != acc.cols()) {
            throw DomainError("sum_scales: shape mismatch");
        }
        acc = sparse_add(acc, mats[k].matrix);
    }
    return acc;
}

/// Text persistence: "appr v1 n alpha epsilon nnz" then "i j value" lines,
/// 17 significant digits so that values round-trip exactly.
inline void save_appr(std::ostream& out, const ApprMatrix& m) {
    const auto& p = m.matrix;
    out << "appr v1 " << p.rows() << ' ' << detail::format_double(m.alpha) << ' ' << detail::format_double(m.epsilon)
        << ' ' << p.nnz() << '\n';
    for (std::size_t r = 0; r < p.rows(); ++r) {
        const auto idx = p.row_indices(r);
        const auto val = p.row_values(r);
        for (std::size_t e = 0; e < idx.size(); ++e) {
            out << r << ' ' << idx[e] << ' ' << detail::format_double(val[e]) << '\n';
        }
    }
}

inline ApprMatrix load_appr(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    ApprMatrix m;
    std::size_t n = 0, nnz = 0;
    bool header = false;
    std::vector<Triplet> triplets;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = detail::trim(line);
        if (body.empty()) continue;
        const auto tok = detail::split_ws(body);
        if (!header) {
            if (tok.size() != 6 || tok[0] != "appr" || tok[1] != "v1") {
                throw ParseError(line_no, "expected header 'appr v1 n alpha epsilon nnz'");
            }
            const auto hn = detail::parse_int(tok[2], line_no);
            const auto hz = detail::parse_int(tok[5], line_no);
            if (hn < 0 || hz < 0) throw ParseError(line_no, "negative size in header");
            n = static_cast<std::size_t>(hn);
            nnz = static_cast<std::size_t>(hz);
            m.alpha = detail::parse_double(tok[3], line_no);
            m.epsilon = detail::parse_double(tok[4], line_no);
            triplets.reserve(nnz);
            header = true;
            continue;
        }
        if (tok.size() != 3) throw ParseError(line_no, "expected 'i j value'");
        const auto i = detail::parse_int(tok[0], line_no);
        const auto j = detail::parse_int(tok[1], line_no);
        if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= n || static_cast<std::size_t>(j) >= n) {
            throw ParseError(line_no, "entry index out of range");
        }
        triplets.push_back({static_cast<Index>(i), static_cast<Index>(j), detail::parse_double(tok[2], line_no)});
    }
    if (!header) throw ParseError(line_no, "missing appr header");
    if (triplets.size() != nnz) throw ParseError(line_no, "entry count does not match header");
    m.matrix = SparseMatrix::from_triplets(n, n, std::move(triplets));
    if (m.matrix.nnz() != nnz) throw ParseError(line_no, "duplicate entries");
    return m;
}

} // namespace pushnet
