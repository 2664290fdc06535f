#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <queue>
#include <span>
#include <utility>
#include <vector>

#include "pushnet/appr.hpp"
#include "pushnet/dense_matrix.hpp"
#include "pushnet/error.hpp"
#include "pushnet/parallel.hpp"
#include "pushnet/sparse_matrix.hpp"

namespace pushnet {

struct LpmpOptions {
    double alpha = 0.1;
    double epsilon = 1e-5;
    std::size_t max_pushes = 10'000'000;  // per source
    std::size_t workers = 1;
    // Processing order of the outer loop; empty means 0..n-1. The output does
    // not depend on it.
    std::vector<NodeId> source_order;
    // Optional per-node weights c for the bookkeeping identity
    // sum_i c_i (pushed_i + pending_i) reported per source. With c = degrees
    // and random-walk weights this equals c_k exactly in real arithmetic.
    std::vector<double> balance_weights;
};

struct LpmpResult {
    DenseMatrix output;
    std::size_t total_pushes = 0;
    std::size_t nonconverged_sources = 0;
    std::vector<double> balance;  // per source, empty unless balance_weights given
};

namespace detail {

// Contribution of one source to the output, sorted by receiving node.
struct SourceContribution {
    std::vector<NodeId> nodes;
    std::vector<double> values;  // nodes.size() x width, row-major
    std::size_t pushes = 0;
    bool converged = true;
    double balance = 0.0;
};

struct LpmpWorkspace {
    std::size_t width;
    std::vector<double> state;    // aggregator states Phi, n x width
    std::vector<double> output;   // accumulated alpha * Phi, n x width
    std::vector<double> pending;  // scalar shadow: Phi_i = pending_i * h_k
    std::vector<double> pushed;   // scalar shadow of the accumulated output
    std::vector<char> touched_flag;
    std::vector<NodeId> touched;

    LpmpWorkspace(std::size_t n, std::size_t h)
        : width(h), state(n * h, 0.0), output(n * h, 0.0), pending(n, 0.0), pushed(n, 0.0), touched_flag(n, 0) {}

    void touch(NodeId i) {
        if (!touched_flag[i]) {
            touched_flag[i] = 1;
            touched.push_back(i);
        }
    }

    void reset() {
        for (NodeId i : touched) {
            std::fill_n(state.begin() + static_cast<std::ptrdiff_t>(i * width), width, 0.0);
            std::fill_n(output.begin() + static_cast<std::ptrdiff_t>(i * width), width, 0.0);
            pending[i] = 0.0;
            pushed[i] = 0.0;
            touched_flag[i] = 0;
        }
        touched.clear();
    }
};

inline SourceContribution lpmp_source(const PushOperator& op, const DenseMatrix& h0, NodeId k,
                                      const LpmpOptions& opt, LpmpWorkspace& ws) {
    SourceContribution out;
    const std::size_t h = h0.cols();
    const auto hk = h0.row(k);
    double norm = 0.0;
    for (double v : hk) norm += v * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) return out;

    const double alpha = opt.alpha;
    const double eps = opt.epsilon;
    ws.touch(k);
    std::copy(hk.begin(), hk.end(), ws.state.begin() + static_cast<std::ptrdiff_t>(k * h));
    ws.pending[k] = 1.0;

    // ||Phi_i|| = pending_i ||h_k||, so "||Phi_i|| > eps ||h_k||" is tested on
    // the scalar shadow, which also drives the largest-state selection.
    ResidualQueue queue;
    if (1.0 > eps) queue.push({1.0, k});
    while (!queue.empty()) {
        const ResidualEntry top = queue.top();
        if (ws.pending[top.node] != top.value) {
            queue.pop();
            continue;
        }
        if (out.pushes >= opt.max_pushes) {
            out.converged = false;
            break;
        }
        queue.pop();
        const NodeId i = top.node;
        const double rho = ws.pending[i];
        double* phi_i = ws.state.data() + i * h;
        std::vector<double> phi(phi_i, phi_i + h);
        // Reset Phi_i before sending so that a self-loop message is retained.
        std::fill_n(phi_i, h, 0.0);
        ws.pending[i] = 0.0;
        double* out_i = ws.output.data() + i * h;
        for (std::size_t f = 0; f < h; ++f) out_i[f] += alpha * phi[f];
        ws.pushed[i] += alpha * rho;
        ++out.pushes;

        const auto recv = op.receivers(i);
        const auto wts = op.weights(i);
        for (std::size_t e = 0; e < recv.size(); ++e) {
            const NodeId j = recv[e];
            ws.touch(j);
            const double coef = (1.0 - alpha) * wts[e];
            double* phi_j = ws.state.data() + j * h;
            for (std::size_t f = 0; f < h; ++f) phi_j[f] += coef * phi[f];
            ws.pending[j] += (1.0 - alpha) * wts[e] * rho;
            if (ws.pending[j] > eps) queue.push({ws.pending[j], j});
        }
    }

    std::sort(ws.touched.begin(), ws.touched.end());
    for (NodeId i : ws.touched) {
        if (!opt.balance_weights.empty()) out.balance += opt.balance_weights[i] * (ws.pushed[i] + ws.pending[i]);
        if (ws.pushed[i] == 0.0) continue;
        out.nodes.push_back(i);
        const double* src = ws.output.data() + i * h;
        out.values.insert(out.values.end(), src, src + h);
    }
    ws.reset();
    return out;
}

} // namespace detail

/// Local push message passing: the features of every source k are diffused
/// through the graph by repeatedly updating the node holding the largest
/// aggregator state, until every state is at most epsilon ||h_k||.
inline LpmpResult lpmp_propagate(const SparseMatrix& w, const DenseMatrix& h0, const LpmpOptions& opt) {
    ApprParams{opt.alpha, opt.epsilon, opt.max_pushes}.validate();
    const PushOperator op(w);
    const std::size_t n = op.size();
    if (h0.rows() != n) throw DomainError("lpmp_propagate: feature rows must equal node count");
    if (!opt.balance_weights.empty() && opt.balance_weights.size() != n) {
        throw DomainError("lpmp_propagate: balance_weights must have one entry per node");
    }
    std::vector<NodeId> order = opt.source_order;
    if (order.empty()) {
        order.resize(n);
        std::iota(order.begin(), order.end(), NodeId{0});
    } else {
        std::vector<NodeId> sorted = order;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < n; ++i) {
            if (sorted.size() != n || sorted[i] != i) throw DomainError("lpmp_propagate: source_order must be a permutation");
        }
    }

    std::vector<detail::SourceContribution> contrib(n);
    parallel_for_ranges(n, opt.workers, [&](std::size_t begin, std::size_t end) {
        detail::LpmpWorkspace ws(n, h0.cols());
        for (std::size_t t = begin; t < end; ++t) contrib[order[t]] = detail::lpmp_source(op, h0, order[t], opt, ws);
    });

    // Sum contributions in increasing source id, independent of processing order.
    LpmpResult res;
    res.output = DenseMatrix(n, h0.cols());
    if (!opt.balance_weights.empty()) res.balance.resize(n);
    const std::size_t h = h0.cols();
    for (std::size_t k = 0; k < n; ++k) {
        const auto& c = contrib[k];
        for (std::size_t e = 0; e < c.nodes.size(); ++e) {
            auto row = res.output.row(c.nodes[e]);
            for (std::size_t f = 0; f < h; ++f) row[f] += c.values[e * h + f];
        }
        res.total_pushes += c.pushes;
        res.nonconverged_sources += c.converged ? 0 : 1;
        if (!res.balance.empty()) res.balance[k] = c.balance;
    }
    return res;
}

} // namespace pushnet
