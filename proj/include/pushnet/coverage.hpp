#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include "pushnet/appr.hpp"
#include "pushnet/dataset.hpp"
#include "pushnet/error.hpp"
#include "pushnet/graph.hpp"

namespace pushnet {

/// Fraction of each hop-k shell that lies in the APPR support of a source.
struct CoverageStats {
    double alpha = 0.0;
    double epsilon = 0.0;
    std::size_t max_hops = 0;
    // per_source[s][k]: coverage of the k-hop shell of s; -1 if that shell is empty.
    std::vector<std::vector<double>> per_source;
    // Mean over sources whose k-shell is nonempty.
    std::vector<double> mean;
    std::vector<std::size_t> sources_with_shell;
};

inline CoverageStats khop_coverage_stats(const Graph& g, const ApprMatrix& appr) {
    const std::size_t n = g.num_nodes();
    if (appr.matrix.rows() != n || appr.matrix.cols() != n) {
        throw DomainError("khop_coverage_stats: APPR matrix is " + std::to_string(appr.matrix.rows()) + "x" +
                          std::to_string(appr.matrix.cols()) + " but the graph has " + std::to_string(n) + " nodes");
    }
    constexpr auto unreachable = std::numeric_limits<std::size_t>::max();
    CoverageStats st;
    st.alpha = appr.alpha;
    st.epsilon = appr.epsilon;
    std::vector<std::vector<std::size_t>> dists(n);
    for (std::size_t s = 0; s < n; ++s) {
        dists[s] = hop_distances(g, static_cast<NodeId>(s));
        for (auto d : dists[s]) {
            if (d != unreachable) st.max_hops = std::max(st.max_hops, d);
        }
    }
    const std::size_t width = st.max_hops + 1;
    st.per_source.assign(n, std::vector<double>(width, -1.0));
    std::vector<double> sum(width, 0.0);
    st.sources_with_shell.assign(width, 0);
    std::vector<std::size_t> shell(width), hit(width);
    for (std::size_t s = 0; s < n; ++s) {
        std::fill(shell.begin(), shell.end(), 0);
        std::fill(hit.begin(), hit.end(), 0);
        for (auto d : dists[s]) {
            if (d != unreachable) ++shell[d];
        }
        const auto idx = appr.matrix.row_indices(s);
        const auto val = appr.matrix.row_values(s);
        for (std::size_t e = 0; e < idx.size(); ++e) {
            const auto d = dists[s][idx[e]];
            if (val[e] > 0.0 && d != unreachable) ++hit[d];
        }
        for (std::size_t k = 0; k < width; ++k) {
            if (shell[k] == 0) continue;
            const double c = static_cast<double>(hit[k]) / static_cast<double>(shell[k]);
            st.per_source[s][k] = c;
            sum[k] += c;
            ++st.sources_with_shell[k];
        }
    }
    st.mean.assign(width, 0.0);
    for (std::size_t k = 0; k < width; ++k) {
        if (st.sources_with_shell[k]) st.mean[k] = sum[k] / static_cast<double>(st.sources_with_shell[k]);
    }
    return st;
}

/// Coverage of a model that aggregates exactly the K-hop ball: 1 up to K, 0 after.
inline std::vector<double> khop_reference_curve(std::size_t hops, std::size_t max_hops) {
    std::vector<double> r(max_hops + 1, 0.0);
    for (std::size_t k = 0; k <= max_hops && k <= hops; ++k) r[k] = 1.0;
    return r;
}

/// True when a's mean curve is >= b's at every k >= from_k (missing entries count as 0).
inline bool mean_curve_dominates(const CoverageStats& a, const CoverageStats& b, std::size_t from_k = 0, double tol = 0.0) {
    const std::size_t width = std::max(a.mean.size(), b.mean.size());
    for (std::size_t k = from_k; k < width; ++k) {
        const double x = k < a.mean.size() ? a.mean[k] : 0.0;
        const double y = k < b.mean.size() ? b.mean[k] : 0.0;
        if (x + tol < y) return false;
    }
    return true;
}

/// Long-format CSV: one row per (curve, k). Curves are "mean",
/// "reference_K" for each requested K, and optionally every source.
inline void write_coverage_csv(std::ostream& out, std::span<const CoverageStats> stats,
                               std::span<const std::size_t> reference_hops, bool per_source = false) {
    out << "alpha,epsilon,curve,k,coverage\n";
    std::size_t max_hops = 0;
    for (const auto& s : stats) {
        max_hops = std::max(max_hops, s.max_hops);
        for (std::size_t k = 0; k < s.mean.size(); ++k) {
            out << detail::format_double(s.alpha) << ',' << detail::format_double(s.epsilon) << ",mean," << k << ','
                << detail::format_double(s.mean[k]) << '\n';
        }
        if (!per_source) continue;
        for (std::size_t src = 0; src < s.per_source.size(); ++src) {
            for (std::size_t k = 0; k < s.per_source[src].size(); ++k) {
                if (s.per_source[src][k] < 0.0) continue;
                out << detail::format_double(s.alpha) << ',' << detail::format_double(s.epsilon) << ",source_" << src
                    << ',' << k << ',' << detail::format_double(s.per_source[src][k]) << '\n';
            }
        }
    }
    for (auto hops : reference_hops) {
        const auto r = khop_reference_curve(hops, max_hops);
        for (std::size_t k = 0; k < r.size(); ++k) {
            out << ",,reference_" << hops << ',' << k << ',' << detail::format_double(r[k]) << '\n';
        }
    }
}

} // namespace pushnet
