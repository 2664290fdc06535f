#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "pushnet/dense_matrix.hpp"
#include "pushnet/error.hpp"
#include "pushnet/graph.hpp"

namespace pushnet {

using Label = std::int32_t;
inline constexpr Label kUnlabeled = -1;

/// Sparse feature triplets: header "n d nnz", then nnz lines "row col value".
inline DenseMatrix load_features_triplets(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    std::size_t n = 0, d = 0, nnz = 0;
    bool have_header = false;
    std::size_t seen = 0;
    DenseMatrix x;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = detail::trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto tok = detail::split_ws(body);
        if (!have_header) {
            if (tok.size() != 3) throw ParseError(line_no, "feature header must be 'n d nnz'");
            const auto hn = detail::parse_int(tok[0], line_no);
            const auto hd = detail::parse_int(tok[1], line_no);
            const auto hz = detail::parse_int(tok[2], line_no);
            if (hn < 0 || hd < 0 || hz < 0) throw DomainError("feature header: negative size");
            n = static_cast<std::size_t>(hn);
            d = static_cast<std::size_t>(hd);
            nnz = static_cast<std::size_t>(hz);
            x = DenseMatrix(n, d);
            have_header = true;
            continue;
        }
        if (tok.size() != 3) throw ParseError(line_no, "expected 'row col value'");
        const auto r = detail::parse_int(tok[0], line_no);
        const auto c = detail::parse_int(tok[1], line_no);
        const double v = detail::parse_double(tok[2], line_no);
        if (r < 0 || c < 0 || static_cast<std::size_t>(r) >= n || static_cast<std::size_t>(c) >= d) {
            throw DomainError("line " + std::to_string(line_no) + ": feature coordinate out of range");
        }
        x(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = v;
        ++seen;
    }
    if (!have_header) throw ParseError(line_no, "missing feature header");
    if (seen != nnz) {
        throw ParseError(line_no, "feature header declares " + std::to_string(nnz) + " entries, found " +
                                      std::to_string(seen));
    }
    return x;
}

/// Dense CSV: one comma-separated row per node.
inline DenseMatrix load_features_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<double> data;
    std::size_t cols = 0;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = detail::trim(line);
        if (body.empty() || body.front() == '#') continue;
        std::size_t count = 0;
        std::size_t start = 0;
        while (true) {
            const auto comma = body.find(',', start);
            const auto field = detail::trim(body.substr(start, comma == std::string_view::npos ? body.size() - start
                                                                                                : comma - start));
            data.push_back(detail::parse_double(field, line_no));
            ++count;
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (rows == 0) cols = count;
        if (count != cols) throw ParseError(line_no, "inconsistent column count");
        ++rows;
    }
    return DenseMatrix(rows, cols, std::move(data));
}

/// "node_id label_id" lines. Nodes without a line are kUnlabeled.
inline std::vector<Label> load_labels(std::istream& in, std::size_t n) {
    std::vector<Label> labels(n, kUnlabeled);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = detail::trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto tok = detail::split_ws(body);
        if (tok.size() != 2) throw ParseError(line_no, "expected 'node_id label_id'");
        const auto node = detail::parse_int(tok[0], line_no);
        const auto label = detail::parse_int(tok[1], line_no);
        if (node < 0 || static_cast<std::size_t>(node) >= n) {
            throw DomainError("line " + std::to_string(line_no) + ": label for unknown node " + std::to_string(node));
        }
        if (label < 0 || label > 1'000'000) {
            throw DomainError("line " + std::to_string(line_no) + ": invalid label " + std::to_string(label));
        }
        labels[static_cast<std::size_t>(node)] = static_cast<Label>(label);
    }
    return labels;
}

struct Dataset {
    std::string name;
    Graph graph;
    DenseMatrix features;
    std::vector<Label> labels;
    std::size_t num_classes = 0;
};

inline std::size_t count_classes(const std::vector<Label>& labels) {
    Label m = -1;
    for (Label l : labels) m = std::max(m, l);
    return static_cast<std::size_t>(m + 1);
}

/// Restricts all parts of the dataset to the largest connected component.
inline Dataset restrict_to_largest_component(const Dataset& ds) {
    auto lcc = largest_connected_component(ds.graph);
    Dataset out;
    out.name = ds.name;
    out.graph = std::move(lcc.graph);
    out.features = DenseMatrix(lcc.new_to_old.size(), ds.features.cols());
    out.labels.resize(lcc.new_to_old.size());
    for (std::size_t j = 0; j < lcc.new_to_old.size(); ++j) {
        const auto src = ds.features.row(lcc.new_to_old[j]);
        std::copy(src.begin(), src.end(), out.features.row(j).begin());
        out.labels[j] = ds.labels[lcc.new_to_old[j]];
    }
    out.num_classes = ds.num_classes;
    return out;
}

namespace detail {

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return in;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    return out;
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

enum class FeatureFormat { Triplets, Csv };

/// Loads edge, feature and label files. The node count is the larger of the
/// edge list's and the feature matrix's, so isolated nodes with features are kept.
inline Dataset load_dataset(const std::string& edges_path, const std::string& features_path,
                            const std::string& labels_path, FeatureFormat format, std::string name = {}) {
    Dataset ds;
    ds.name = std::move(name);
    {
        auto in = detail::open_input(edges_path);
        ds.graph = load_edge_list(in);
    }
    {
        auto in = detail::open_input(features_path);
        ds.features = format == FeatureFormat::Csv ? load_features_csv(in) : load_features_triplets(in);
    }
    if (ds.features.rows() < ds.graph.num_nodes()) {
        throw DomainError("feature matrix has " + std::to_string(ds.features.rows()) + " rows but the graph has " +
                          std::to_string(ds.graph.num_nodes()) + " nodes");
    }
    if (ds.features.rows() > ds.graph.num_nodes()) {
        ds.graph = Graph(ds.features.rows(), ds.graph.edges());
    }
    {
        auto in = detail::open_input(labels_path);
        ds.labels = load_labels(in, ds.graph.num_nodes());
    }
    ds.num_classes = count_classes(ds.labels);
    return ds;
}

inline void write_edge_list(std::ostream& out, const Graph& g) {
    out << "N " << g.num_nodes() << '\n';
    for (const auto& [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

inline void write_features_triplets(std::ostream& out, const DenseMatrix& x) {
    std::size_t nnz = 0;
    for (double v : x.data()) nnz += v != 0.0;
    out << x.rows() << ' ' << x.cols() << ' ' << nnz << '\n';
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
            if (x(i, j) != 0.0) out << i << ' ' << j << ' ' << detail::format_double(x(i, j)) << '\n';
        }
    }
}

inline void write_labels(std::ostream& out, const std::vector<Label>& labels) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != kUnlabeled) out << i << ' ' << labels[i] << '\n';
    }
}

} // namespace pushnet
