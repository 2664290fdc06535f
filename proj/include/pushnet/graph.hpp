#pragma once

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pushnet/error.hpp"
#include "pushnet/sparse_matrix.hpp"

namespace pushnet {

using NodeId = Index;
using Edge = std::pair<NodeId, NodeId>;

/// Undirected simple graph (self-loops allowed) with canonical edge storage:
/// each edge is stored once as (min, max), sorted and free of duplicates.
class Graph {
public:
    Graph() = default;

    /// Canonicalizes the edge list: orientation is dropped and duplicates collapse.
    Graph(std::size_t n, std::vector<Edge> edges) : n_(n) {
        for (auto& [u, v] : edges) {
            if (u >= n || v >= n) throw DomainError("graph: edge endpoint out of range");
            if (u > v) std::swap(u, v);
        }
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
        edges_ = std::move(edges);
        degrees_.assign(n_, 0);
        for (const auto& [u, v] : edges_) {
            ++degrees_[u];
            if (u != v) ++degrees_[v];
        }
        build_neighbors();
    }

    std::size_t num_nodes() const noexcept { return n_; }
    std::size_t num_edges() const noexcept { return edges_.size(); }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const std::vector<std::size_t>& degrees() const noexcept { return degrees_; }
    std::size_t degree(NodeId i) const noexcept { return degrees_[i]; }

    /// Sorted neighbor ids of i, including i itself when it has a self-loop.
    std::span<const NodeId> neighbors(NodeId i) const noexcept {
        return {neighbors_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
    }

    friend bool operator==(const Graph& a, const Graph& b) { return a.n_ == b.n_ && a.edges_ == b.edges_; }

private:
    void build_neighbors() {
        offsets_.assign(n_ + 1, 0);
        for (std::size_t i = 0; i < n_; ++i) offsets_[i + 1] = offsets_[i] + degrees_[i];
        neighbors_.assign(offsets_.back(), 0);
        std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
        for (const auto& [u, v] : edges_) {
            neighbors_[cursor[u]++] = v;
            if (u != v) neighbors_[cursor[v]++] = u;
        }
        for (std::size_t i = 0; i < n_; ++i) {
            std::sort(neighbors_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]),
                      neighbors_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]));
        }
    }

    std::size_t n_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::size_t> degrees_;
    std::vector<std::size_t> offsets_{0};
    std::vector<NodeId> neighbors_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
        if (i >= s.size()) break;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
        out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::int64_t parse_int(std::string_view tok, std::size_t line) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
        throw ParseError(line, "expected integer, got '" + std::string(tok) + "'");
    }
    return v;
}

inline double parse_double(std::string_view tok, std::size_t line) {
    // std::from_chars for double is missing from older libstdc++; strtod on a
    // bounded copy gives the same correctly rounded result.
    const std::string copy(tok);
    char* end = nullptr;
    const double v = std::strtod(copy.c_str(), &end);
    if (copy.empty() || end != copy.c_str() + copy.size()) {
        throw ParseError(line, "expected number, got '" + copy + "'");
    }
    return v;
}

inline NodeId checked_node_id(std::int64_t v, std::size_t line) {
    if (v < 0) throw DomainError("line " + std::to_string(line) + ": negative node id " + std::to_string(v));
    if (v >= static_cast<std::int64_t>(std::numeric_limits<NodeId>::max())) {
        throw DomainError("line " + std::to_string(line) + ": node id too large");
    }
    return static_cast<NodeId>(v);
}

} // namespace detail

/// Reads "u v" pairs, one per line. Lines starting with '#' are comments. An
/// optional first line "N <n>" fixes the node count; otherwise n = max id + 1.
inline Graph load_edge_list(std::istream& in) {
    std::vector<Edge> edges;
    std::string line;
    std::size_t line_no = 0;
    bool seen_content = false;
    std::int64_t declared_n = -1;
    std::int64_t max_id = -1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = detail::trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto tokens = detail::split_ws(body);
        if (!seen_content && tokens.size() == 2 && tokens[0] == "N") {
            declared_n = detail::parse_int(tokens[1], line_no);
            if (declared_n < 0) throw DomainError("line " + std::to_string(line_no) + ": negative node count");
            seen_content = true;
            continue;
        }
        seen_content = true;
        if (tokens.size() != 2) throw ParseError(line_no, "expected two node ids");
        const NodeId u = detail::checked_node_id(detail::parse_int(tokens[0], line_no), line_no);
        const NodeId v = detail::checked_node_id(detail::parse_int(tokens[1], line_no), line_no);
        if (declared_n >= 0 && (u >= declared_n || v >= declared_n)) {
            throw DomainError("line " + std::to_string(line_no) + ": node id exceeds declared node count");
        }
        max_id = std::max<std::int64_t>(max_id, std::max(u, v));
        edges.emplace_back(u, v);
    }
    const std::size_t n = declared_n >= 0 ? static_cast<std::size_t>(declared_n) : static_cast<std::size_t>(max_id + 1);
    return Graph(n, std::move(edges));
}

/// Result of restricting a graph to one connected component.
struct ComponentRestriction {
    Graph graph;
    // old_to_new[i] is the compacted id of original node i, or -1 if dropped.
    std::vector<std::int64_t> old_to_new;
    // new_to_old[j] is the original id of compacted node j.
    std::vector<NodeId> new_to_old;
};

/// Component label per node; labels are assigned in order of each
/// component's smallest node id, starting at 0.
inline std::vector<std::size_t> connected_components(const Graph& g, std::size_t* count = nullptr) {
    constexpr auto unset = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> label(g.num_nodes(), unset);
    std::size_t next = 0;
    std::vector<NodeId> stack;
    for (std::size_t s = 0; s < g.num_nodes(); ++s) {
        if (label[s] != unset) continue;
        label[s] = next;
        stack.push_back(static_cast<NodeId>(s));
        while (!stack.empty()) {
            const NodeId u = stack.back();
            stack.pop_back();
            for (NodeId v : g.neighbors(u)) {
                if (label[v] == unset) {
                    label[v] = next;
                    stack.push_back(v);
                }
            }
        }
        ++next;
    }
    if (count) *count = next;
    return label;
}

/// Induced subgraph on the largest connected component, ids compacted in
/// increasing original order. Ties go to the component with the smallest
/// minimum original id.
inline ComponentRestriction largest_connected_component(const Graph& g) {
    ComponentRestriction out;
    out.old_to_new.assign(g.num_nodes(), -1);
    if (g.num_nodes() == 0) return out;
    std::size_t count = 0;
    const auto label = connected_components(g, &count);
    std::vector<std::size_t> sizes(count, 0);
    for (auto l : label) ++sizes[l];
    // Labels follow minimum node id, so the first maximum wins the tie.
    const std::size_t best =
        static_cast<std::size_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        if (label[i] == best) {
            out.old_to_new[i] = static_cast<std::int64_t>(out.new_to_old.size());
            out.new_to_old.push_back(static_cast<NodeId>(i));
        }
    }
    std::vector<Edge> edges;
    for (const auto& [u, v] : g.edges()) {
        if (label[u] == best) {
            edges.emplace_back(static_cast<NodeId>(out.old_to_new[u]), static_cast<NodeId>(out.old_to_new[v]));
        }
    }
    out.graph = Graph(out.new_to_old.size(), std::move(edges));
    return out;
}

enum class NormalizationKind {
    SymmetricSelfLoops,  // D~^{-1/2} (A + I) D~^{-1/2}
    RandomWalk,          // D^{-1} A
};

/// Unweighted adjacency matrix; a self-loop contributes a single 1 on the diagonal.
inline SparseMatrix adjacency_matrix(const Graph& g) {
    std::vector<Triplet> t;
    t.reserve(2 * g.num_edges());
    for (const auto& [u, v] : g.edges()) {
        t.push_back({u, v, 1.0});
        if (u != v) t.push_back({v, u, 1.0});
    }
    return SparseMatrix::from_triplets(g.num_nodes(), g.num_nodes(), std::move(t));
}

inline SparseMatrix normalize_adjacency(const Graph& g, NormalizationKind kind) {
    if (g.num_nodes() == 0) throw DomainError("normalize_adjacency: graph has no nodes");
    const std::size_t n = g.num_nodes();
    std::vector<Triplet> t;
    t.reserve(2 * g.num_edges() + n);
    for (const auto& [u, v] : g.edges()) {
        t.push_back({u, v, 1.0});
        if (u != v) t.push_back({v, u, 1.0});
    }
    if (kind == NormalizationKind::SymmetricSelfLoops) {
        for (std::size_t i = 0; i < n; ++i) t.push_back({static_cast<Index>(i), static_cast<Index>(i), 1.0});
    }
    SparseMatrix a = SparseMatrix::from_triplets(n, n, std::move(t));
    std::vector<double> deg(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (double v : a.row_values(r)) deg[r] += v;
    }
    std::vector<double> vals = a.values();
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t k = a.row_offsets()[r]; k < a.row_offsets()[r + 1]; ++k) {
            const std::size_t c = a.col_indices()[k];
            if (kind == NormalizationKind::SymmetricSelfLoops) {
                vals[k] /= std::sqrt(deg[r]) * std::sqrt(deg[c]);
            } else {
                vals[k] /= deg[r];
            }
        }
    }
    return a.with_values(std::move(vals));
}

/// BFS hop distances from source; unreachable nodes get SIZE_MAX.
inline std::vector<std::size_t> hop_distances(const Graph& g, NodeId source) {
    std::vector<std::size_t> dist(g.num_nodes(), std::numeric_limits<std::size_t>::max());
    std::queue<NodeId> q;
    dist[source] = 0;
    q.push(source);
    while (!q.empty()) {
        const NodeId u = q.front();
        q.pop();
        for (NodeId v : g.neighbors(u)) {
            if (dist[v] == std::numeric_limits<std::size_t>::max()) {
                dist[v] = dist[u] + 1;
                q.push(v);
            }
        }
    }
    return dist;
}

} // namespace pushnet
