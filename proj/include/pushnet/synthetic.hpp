#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pushnet/dataset.hpp"
#include "pushnet/error.hpp"
#include "pushnet/graph.hpp"

namespace pushnet {

/// Synthetic graphs for tests, benchmarks and demos.
namespace synth {

namespace detail {

inline double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Links every component to the next one through a random member of each.
inline void connect_components(std::size_t n, std::vector<Edge>& edges, std::mt19937_64& rng) {
    std::size_t count = 0;
    const auto label = connected_components(Graph(n, edges), &count);
    if (count < 2) return;
    std::vector<std::vector<NodeId>> members(count);
    for (std::size_t i = 0; i < n; ++i) members[label[i]].push_back(static_cast<NodeId>(i));
    for (std::size_t c = 1; c < count; ++c) {
        const auto& a = members[c - 1];
        const auto& b = members[c];
        edges.emplace_back(a[rng() % a.size()], b[rng() % b.size()]);
    }
}

} // namespace detail

/// G(n, p), then patched into a single component.
inline Graph erdos_renyi_connected(std::size_t n, double p, std::uint64_t seed) {
    if (n == 0) throw DomainError("erdos_renyi: n must be positive");
    std::mt19937_64 rng(seed);
    std::vector<Edge> edges;
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = u + 1; v < n; ++v) {
            if (detail::unit(rng) < p) edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
        }
    }
    detail::connect_components(n, edges, rng);
    return Graph(n, std::move(edges));
}

/// Preferential attachment: each new node links to m distinct earlier nodes,
/// chosen with probability proportional to degree. Connected by construction.
inline Graph barabasi_albert(std::size_t n, std::size_t m, std::uint64_t seed) {
    if (m == 0 || n <= m) throw DomainError("barabasi_albert: need 0 < m < n");
    std::mt19937_64 rng(seed);
    std::vector<Edge> edges;
    std::vector<NodeId> ends;  // every edge endpoint once; sampling from it is degree-proportional
    for (std::size_t u = 1; u <= m; ++u) {
        edges.emplace_back(static_cast<NodeId>(u - 1), static_cast<NodeId>(u));
        ends.push_back(static_cast<NodeId>(u - 1));
        ends.push_back(static_cast<NodeId>(u));
    }
    std::vector<NodeId> picked;
    for (std::size_t u = m + 1; u < n; ++u) {
        picked.clear();
        while (picked.size() < m) {
            const NodeId t = ends[rng() % ends.size()];
            if (std::find(picked.begin(), picked.end(), t) == picked.end()) picked.push_back(t);
        }
        for (NodeId t : picked) {
            edges.emplace_back(t, static_cast<NodeId>(u));
            ends.push_back(t);
            ends.push_back(static_cast<NodeId>(u));
        }
    }
    return Graph(n, std::move(edges));
}

/// Two communities with dense intra-block and sparse inter-block edges.
/// Features are the one-hot block indicator; labels are the block.
inline Dataset two_block_dataset(std::size_t block_size = 30, double p_in = 0.3, double p_out = 0.02,
                                 std::uint64_t seed = 0) {
    const std::size_t n = 2 * block_size;
    std::mt19937_64 rng(seed);
    std::vector<Edge> edges;
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = u + 1; v < n; ++v) {
            const bool same = (u < block_size) == (v < block_size);
            if (detail::unit(rng) < (same ? p_in : p_out)) edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
        }
    }
    detail::connect_components(n, edges, rng);
    Dataset ds;
    ds.name = "two-block";
    ds.graph = Graph(n, std::move(edges));
    ds.features = DenseMatrix(n, 2);
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t b = i < block_size ? 0 : 1;
        ds.features(i, b) = 1.0;
        ds.labels[i] = static_cast<Label>(b);
    }
    ds.num_classes = 2;
    return ds;
}

/// Blocks of a stochastic block model with noisy block-correlated features;
/// used where a task should be learnable but not trivial.
inline Dataset planted_partition_dataset(std::size_t classes, std::size_t block_size, double p_in, double p_out,
                                         std::size_t feature_dim, double feature_noise, std::uint64_t seed) {
    if (classes == 0 || block_size == 0 || feature_dim < classes) {
        throw DomainError("planted_partition: need classes > 0, block_size > 0, feature_dim >= classes");
    }
    const std::size_t n = classes * block_size;
    std::mt19937_64 rng(seed);
    std::vector<Edge> edges;
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = u + 1; v < n; ++v) {
            const bool same = u / block_size == v / block_size;
            if (detail::unit(rng) < (same ? p_in : p_out)) edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
        }
    }
    detail::connect_components(n, edges, rng);
    Dataset ds;
    ds.name = "planted-partition";
    ds.graph = Graph(n, std::move(edges));
    ds.features = DenseMatrix(n, feature_dim);
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i / block_size;
        ds.labels[i] = static_cast<Label>(c);
        for (std::size_t f = 0; f < feature_dim; ++f) {
            const bool signal = f % classes == c;
            if (detail::unit(rng) < (signal ? 1.0 - feature_noise : feature_noise)) ds.features(i, f) = 1.0;
        }
    }
    ds.num_classes = classes;
    return ds;
}

} // namespace synth
} // namespace pushnet
