#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "pushnet/appr.hpp"
#include "pushnet/exact_ppr.hpp"
#include "pushnet/graph.hpp"
#include "test_util.hpp"

using namespace pushnet;

namespace {

SparseMatrix rw(const Graph& g) { return normalize_adjacency(g, NormalizationKind::RandomWalk); }

// Independent oracle: truncated Neumann series alpha * sum_t ((1-alpha) W)^t.
DenseMatrix neumann_ppr(const SparseMatrix& w, double alpha, int terms) {
    const std::size_t n = w.rows();
    const DenseMatrix wd = w.to_dense();
    DenseMatrix term(n, n), acc(n, n);
    for (std::size_t i = 0; i < n; ++i) term(i, i) = 1.0;
    for (int t = 0; t < terms; ++t) {
        for (std::size_t i = 0; i < acc.size(); ++i) acc.data()[i] += alpha * term.data()[i];
        DenseMatrix next = testutil::naive_matmul(term, wd);
        for (double& v : next.data()) v *= 1.0 - alpha;
        term = std::move(next);
    }
    return acc;
}

double column_error(const ApprColumn& c, const DenseMatrix& exact) {
    double e = 0.0;
    for (std::size_t s = 0; s < exact.rows(); ++s) e = std::max(e, std::abs(c.estimate(static_cast<NodeId>(s)) - exact(s, c.target)));
    return e;
}

} // namespace

TEST(ReversePush, SelfLoopOnly) {
    const SparseMatrix w = SparseMatrix::identity(1);
    for (double a : {0.05, 0.3, 0.9}) {
        const auto c = reverse_push_column(w, 0, {a, 1e-8});
        EXPECT_GE(c.estimate(0), 1.0 - 1e-8);
        EXPECT_LE(c.estimate(0), 1.0);
        EXPECT_TRUE(c.converged);
    }
}

TEST(ReversePush, TwoNodePath) {
    const auto c = reverse_push_column(rw(Graph(2, {{0, 1}})), 0, {0.5, 1e-10});
    EXPECT_NEAR(c.estimate(0), 2.0 / 3.0, 1e-10);
    EXPECT_NEAR(c.estimate(1), 1.0 / 3.0, 1e-10);
}

TEST(ReversePush, EpsilonAboveInitialResidual) {
    const auto c = reverse_push_column(rw(Graph(2, {{0, 1}})), 0, {0.5, 1.5});
    EXPECT_TRUE(c.entries.empty());
    EXPECT_EQ(c.pushes, 0u);
}

TEST(ReversePush, ParameterErrors) {
    const auto w = rw(Graph(2, {{0, 1}}));
    EXPECT_THROW(reverse_push_column(w, 0, {0.0, 1e-4}), DomainError);
    EXPECT_THROW(reverse_push_column(w, 0, {1.0, 1e-4}), DomainError);
    EXPECT_THROW(reverse_push_column(w, 0, {0.5, 0.0}), DomainError);
    EXPECT_THROW(reverse_push_column(w, 2, {0.5, 1e-4}), DomainError);
    EXPECT_THROW(PushOperator(SparseMatrix::from_triplets(1, 1, {{0, 0, -0.5}})), DomainError);
}

TEST(ReversePush, PushCapFlagsNonConvergence) {
    const Graph g = testutil::random_connected_graph(40, 2);
    const auto c = reverse_push_column(rw(g), 0, {0.1, 1e-9, 5});
    EXPECT_FALSE(c.converged);
    EXPECT_EQ(c.pushes, 5u);
    const auto m = build_appr_matrix(rw(g), {0.1, 1e-9, 5});
    EXPECT_EQ(m.nonconverged_columns, g.num_nodes());
    EXPECT_FALSE(m.converged());
}

TEST(ExactOracle, Examples) {
    const auto p = exact_ppr_oracle(rw(Graph(2, {{0, 1}})), 0.5);
    EXPECT_NEAR(p(0, 0), 2.0 / 3.0, 1e-14);
    EXPECT_NEAR(p(0, 1), 1.0 / 3.0, 1e-14);
    EXPECT_NEAR(p(1, 0), 1.0 / 3.0, 1e-14);
    EXPECT_NEAR(p(1, 1), 2.0 / 3.0, 1e-14);
    EXPECT_NEAR(exact_ppr_oracle(SparseMatrix::identity(1), 0.3)(0, 0), 1.0, 1e-14);
}

TEST(ExactOracle, RowsSumToOneAndMatchNeumannSeries) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const auto w = rw(testutil::random_connected_graph(25, seed));
        const double alpha = 0.3;
        const auto p = exact_ppr_oracle(w, alpha);
        for (std::size_t i = 0; i < p.rows(); ++i) {
            EXPECT_NEAR(std::accumulate(p.row(i).begin(), p.row(i).end(), 0.0), 1.0, 1e-10);
        }
        EXPECT_LE(max_abs_diff(p, neumann_ppr(w, alpha, 200)), 1e-12);
    }
}

TEST(ExactOracle, SizeLimit) { EXPECT_THROW(exact_ppr_oracle(SparseMatrix::identity(20), 0.5, 10), DomainError); }

TEST(BuildAppr, TwoNodePath) {
    const auto m = build_appr_matrix(rw(Graph(2, {{0, 1}})), {0.5, 1e-10});
    const auto d = m.matrix.to_dense();
    EXPECT_NEAR(d(0, 0), 2.0 / 3.0, 1e-10);
    EXPECT_NEAR(d(0, 1), 1.0 / 3.0, 1e-10);
    EXPECT_NEAR(d(1, 0), 1.0 / 3.0, 1e-10);
    EXPECT_NEAR(d(1, 1), 2.0 / 3.0, 1e-10);
}

TEST(BuildAppr, SingleNode) {
    const auto m = build_appr_matrix(normalize_adjacency(Graph(1, {}), NormalizationKind::SymmetricSelfLoops), {0.2, 1e-6});
    ASSERT_EQ(m.matrix.nnz(), 1u);
    EXPECT_GE(m.matrix.value(0, 0), 1.0 - 1e-6);
    EXPECT_LE(m.matrix.value(0, 0), 1.0);
}

TEST(BuildAppr, OracleBoundProperty) {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        const Graph g = testutil::random_connected_graph(20 + 10 * seed, seed);
        const auto w = rw(g);
        for (double alpha : {0.05, 0.2, 0.5}) {
            const auto exact = exact_ppr_oracle(w, alpha);
            for (double eps : {1e-3, 1e-6}) {
                const PushOperator op(w);
                for (std::size_t k = 0; k < g.num_nodes(); ++k) {
                    const auto c = reverse_push_column(op, static_cast<NodeId>(k), {alpha, eps});
                    ASSERT_LE(column_error(c, exact), eps) << "seed " << seed << " k " << k;
                    for (const auto& [s, v] : c.entries) ASSERT_GE(v, 0.0);
                }
            }
        }
    }
}

TEST(BuildAppr, DegreeWeightedMassBound) {
    // Under random-walk weights, sum_s d_s p_s(k) <= d_k: the unweighted column
    // sum can exceed 1 on non-regular graphs, the degree-weighted one cannot.
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const Graph g = testutil::random_connected_graph(40, seed);
        const auto w = rw(g);
        for (double alpha : {0.05, 0.2, 0.5}) {
            const PushOperator op(w);
            for (std::size_t k = 0; k < g.num_nodes(); ++k) {
                const auto c = reverse_push_column(op, static_cast<NodeId>(k), {alpha, 1e-5});
                double mass = 0.0;
                for (const auto& [s, v] : c.entries) mass += static_cast<double>(g.degree(s)) * v;
                EXPECT_LE(mass, static_cast<double>(g.degree(static_cast<NodeId>(k))) * (1.0 + 1e-12));
            }
        }
    }
}

TEST(BuildAppr, MonotoneRefinementOfSupport) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const Graph g = synth::erdos_renyi_connected(200, 2.5 / 200.0, seed);
        for (auto kind : {NormalizationKind::RandomWalk, NormalizationKind::SymmetricSelfLoops}) {
            const auto w = normalize_adjacency(g, kind);
            const auto fine = build_appr_matrix(w, {0.3, 1e-6}).matrix;
            const auto coarse = build_appr_matrix(w, {0.3, 1e-2}).matrix;
            for (std::size_t r = 0; r < coarse.rows(); ++r) {
                for (Index c : coarse.row_indices(r)) EXPECT_TRUE(fine.contains(r, c));
            }
            EXPECT_LT(coarse.nnz(), fine.nnz());
        }
    }
}

TEST(BuildAppr, DeterministicAcrossWorkerCounts) {
    const Graph g = testutil::random_connected_graph(150, 3);
    const auto w = normalize_adjacency(g, NormalizationKind::SymmetricSelfLoops);
    const auto a = build_appr_matrix(w, {0.1, 1e-5}, 1);
    const auto b = build_appr_matrix(w, {0.1, 1e-5}, 4);
    const auto c = build_appr_matrix(w, {0.1, 1e-5}, 7);
    EXPECT_EQ(a.matrix, b.matrix);
    EXPECT_EQ(a.matrix, c.matrix);
    EXPECT_EQ(a.total_pushes, c.total_pushes);
}

TEST(BuildAppr, SparseOnLargerGraph) {
    // 40 x 40 grid: large diameter, like a citation graph's periphery.
    std::vector<Edge> edges;
    for (NodeId r = 0; r < 40; ++r)
        for (NodeId c = 0; c < 40; ++c) {
            if (c + 1 < 40) edges.emplace_back(r * 40 + c, r * 40 + c + 1);
            if (r + 1 < 40) edges.emplace_back(r * 40 + c, (r + 1) * 40 + c);
        }
    const Graph g(1600, edges);
    const auto m = build_appr_matrix(normalize_adjacency(g, NormalizationKind::SymmetricSelfLoops), {0.2, 1e-4});
    const double density = static_cast<double>(m.matrix.nnz()) / (1600.0 * 1600.0);
    EXPECT_LT(density, 0.1) << density;
    const auto r = row_l1_normalize(m.matrix);
    for (std::size_t i = 0; i < r.rows(); ++i) {
        const auto v = r.row_values(i);
        EXPECT_NEAR(std::accumulate(v.begin(), v.end(), 0.0), 1.0, 1e-12);
    }
}

TEST(SumScales, Examples) {
    const Graph g = testutil::random_connected_graph(30, 4);
    const auto m = build_appr_matrix(rw(g), {0.2, 1e-4});
    const std::vector<ApprMatrix> one{m};
    EXPECT_EQ(sum_scales(one), m.matrix);
    ApprMatrix zero;
    zero.matrix = SparseMatrix(30, 30);
    const std::vector<ApprMatrix> with_zero{m, zero};
    EXPECT_EQ(sum_scales(with_zero), m.matrix);
    ApprMatrix a, b;
    a.matrix = testutil::random_sparse(12, 12, 0.3, 1);
    b.matrix = testutil::random_sparse(12, 12, 0.3, 2);
    auto expect = a.matrix.to_dense();
    for (std::size_t i = 0; i < expect.size(); ++i) expect.data()[i] += b.matrix.to_dense().data()[i];
    const std::vector<ApprMatrix> two{a, b};
    EXPECT_LE(max_abs_diff(sum_scales(two).to_dense(), expect), 1e-15);
    ApprMatrix wrong;
    wrong.matrix = SparseMatrix(3, 3);
    const std::vector<ApprMatrix> bad{a, wrong};
    EXPECT_THROW(sum_scales(bad), DomainError);
    EXPECT_THROW(sum_scales(std::span<const ApprMatrix>{}), DomainError);
}

TEST(Persistence, BitExactRoundTrip) {
    const Graph g = testutil::random_connected_graph(50, 8);
    const auto m = build_appr_matrix(normalize_adjacency(g, NormalizationKind::SymmetricSelfLoops), {0.05, 1e-5});
    std::stringstream ss;
    save_appr(ss, m);
    const auto back = load_appr(ss);
    EXPECT_EQ(back.matrix, m.matrix);
    EXPECT_EQ(back.alpha, m.alpha);
    EXPECT_EQ(back.epsilon, m.epsilon);
}

TEST(Persistence, RejectsMalformedInput) {
    std::istringstream no_header("0 0 1\n");
    EXPECT_THROW(load_appr(no_header), ParseError);
    std::istringstream short_body("appr v1 2 0.1 1e-05 2\n0 0 0.5\n");
    EXPECT_THROW(load_appr(short_body), ParseError);
    std::istringstream out_of_range("appr v1 2 0.1 1e-05 1\n0 5 0.5\n");
    EXPECT_THROW(load_appr(out_of_range), Error);
}
