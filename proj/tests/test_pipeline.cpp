#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "pushnet/bench.hpp"
#include "pushnet/config.hpp"
#include "pushnet/coverage.hpp"
#include "pushnet/experiment.hpp"
#include "pushnet/metrics.hpp"
#include "pushnet/split.hpp"
#include "pushnet/synthetic.hpp"
#include "test_util.hpp"

using namespace pushnet;
namespace fs = std::filesystem;

namespace {

std::vector<Label> class_labels(std::size_t n, std::size_t c) {
    std::vector<Label> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<Label>(i % c);
    return y;
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("pushnet_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig write_dataset(const fs::path& dir, const Dataset& ds) {
    {
        std::ofstream e(dir / "edges.txt");
        write_edge_list(e, ds.graph);
        std::ofstream f(dir / "features.txt");
        write_features_triplets(f, ds.features);
        std::ofstream l(dir / "labels.txt");
        write_labels(l, ds.labels);
    }
    ExperimentConfig c;
    c.name = ds.name;
    c.edges = (dir / "edges.txt").string();
    c.features = (dir / "features.txt").string();
    c.labels = (dir / "labels.txt").string();
    return c;
}

} // namespace

TEST(Split, CiteSeerSizedCounts) {
    const auto y = class_labels(2120, 6);
    const auto s = sample_split(y, 6, {20, 500, 1});
    EXPECT_EQ(s.train.size(), 120u);
    EXPECT_EQ(s.val.size(), 500u);
    EXPECT_EQ(s.test.size(), 1500u);
}

TEST(Split, SingleClass) {
    const std::vector<Label> y(600, 0);
    const auto s = sample_split(y, 1, {20, 500, 3});
    EXPECT_EQ(s.train.size(), 20u);
    EXPECT_EQ(s.val.size(), 500u);
    EXPECT_EQ(s.test.size(), 80u);
}

TEST(Split, DeterministicDisjointExhaustive) {
    const auto y = class_labels(900, 4);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto a = sample_split(y, 4, {20, 500, seed});
        EXPECT_EQ(a, sample_split(y, 4, {20, 500, seed}));
        std::set<NodeId> all;
        for (const auto* part : {&a.train, &a.val, &a.test}) all.insert(part->begin(), part->end());
        EXPECT_EQ(all.size(), 900u);
        EXPECT_EQ(a.train.size() + a.val.size() + a.test.size(), 900u);
        std::vector<std::size_t> per(4, 0);
        for (NodeId i : a.train) ++per[static_cast<std::size_t>(y[i])];
        EXPECT_EQ(per, (std::vector<std::size_t>(4, 20)));
    }
    EXPECT_NE(sample_split(y, 4, {20, 500, 0}), sample_split(y, 4, {20, 500, 1}));
}

TEST(Split, Errors) {
    auto y = class_labels(600, 2);
    y[1] = 0;
    std::vector<Label> small(30, 0);
    small[0] = 1;
    EXPECT_THROW(sample_split(small, 2, {20, 5, 0}), ConfigError);
    EXPECT_THROW(sample_split(class_labels(530, 1), 1, {20, 510, 0}), ConfigError);
}

TEST(Split, UnlabeledNodesNeverSampled) {
    auto y = class_labels(700, 2);
    for (std::size_t i = 0; i < 700; i += 7) y[i] = kUnlabeled;
    const auto s = sample_split(y, 2, {20, 500, 2});
    for (const auto* part : {&s.train, &s.val, &s.test})
        for (NodeId i : *part) EXPECT_NE(y[i], kUnlabeled);
}

TEST(Metrics, Examples) {
    const std::vector<Label> y{0, 1, 0, 1};
    const std::vector<NodeId> mask{0, 1, 2, 3};
    const auto perfect = evaluate(y, y, mask, 2);
    EXPECT_EQ(perfect.accuracy, 1.0);
    EXPECT_EQ(perfect.macro_f1, 1.0);
    const std::vector<Label> zeros{0, 0, 0, 0};
    const auto s = evaluate(zeros, y, mask, 2);
    EXPECT_DOUBLE_EQ(s.accuracy, 0.5);
    EXPECT_DOUBLE_EQ(s.macro_f1, 1.0 / 3.0);
    // Class 2 never appears in truth or predictions and contributes 0.
    EXPECT_DOUBLE_EQ(evaluate(y, y, mask, 3).macro_f1, 2.0 / 3.0);
    EXPECT_THROW(evaluate(y, y, std::vector<NodeId>{}, 2), DomainError);
}

TEST(Metrics, SampleStd) {
    const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
    const auto s = summarize(xs);
    EXPECT_DOUBLE_EQ(s.mean, 2.5);
    EXPECT_NEAR(s.std, std::sqrt(5.0 / 3.0), 1e-15);
    EXPECT_EQ(summarize(std::vector<double>{7.0}).std, 0.0);
}

TEST(Config, ParsesAndOverrides) {
    std::istringstream in(
        "# experiment\n"
        "name = toy\nedges = e.txt\nfeatures = f.csv\nlabels = l.txt\nfeature_format = csv\n"
        "alphas = 0.3, 0.1\nepsilon = 1e-4\naggregator = max\nvariant = ptp\n"
        "hidden = 16  # narrower\nsplits = 2\ninits = 3\nnorm = rw\n");
    const auto c = parse_config(in, "/data");
    EXPECT_EQ(c.name, "toy");
    EXPECT_EQ(c.edges, "/data/e.txt");
    EXPECT_EQ(c.feature_format, FeatureFormat::Csv);
    EXPECT_EQ(c.alphas, (std::vector<double>{0.3, 0.1}));
    EXPECT_EQ(c.aggregator, Aggregator::Max);
    EXPECT_EQ(c.variant, Variant::PTP);
    EXPECT_EQ(c.norm, NormalizationKind::RandomWalk);
    const auto spec = c.model_spec(10, 3);
    EXPECT_EQ(spec.hidden, 16u);
    EXPECT_EQ(spec.dropout, 0.3);  // tuned default kept
    EXPECT_EQ(spec.num_scales, 2u);
}

TEST(Config, Errors) {
    std::istringstream unknown("colour = red\n");
    EXPECT_THROW(parse_config(unknown), ConfigError);
    std::istringstream no_eq("variant full\n");
    EXPECT_THROW(parse_config(no_eq), ParseError);
    std::istringstream bad_variant("variant = gcn\n");
    EXPECT_THROW(parse_config(bad_variant), ConfigError);
    ExperimentConfig c;
    EXPECT_THROW(validate(c), ConfigError);
    c.edges = "/nonexistent/e";
    c.features = "/nonexistent/f";
    c.labels = "/nonexistent/l";
    EXPECT_THROW(validate(c), IoError);
}

TEST(Experiment, RunCountsAndDeterminism) {
    const auto dir = scratch("counts");
    const Dataset ds = synth::planted_partition_dataset(3, 40, 0.2, 0.01, 12, 0.15, 4);
    auto cfg = write_dataset(dir, ds);
    cfg.variant = Variant::PP;
    cfg.splits = 2;
    cfg.inits = 2;
    cfg.train_per_class = 5;
    cfg.val_count = 30;
    cfg.max_epochs = 60;
    cfg.patience = 20;
    const auto r = run_experiment(cfg);
    ASSERT_EQ(r.runs.size(), 4u);
    for (const auto& run : r.runs) {
        EXPECT_GE(run.accuracy, 0.0);
        EXPECT_LE(run.accuracy, 1.0);
        EXPECT_LE(run.epochs, 60u);
    }
    EXPECT_EQ(r.runs[1].init_seed, cfg.init_seed + 1);
    EXPECT_EQ(r.runs[2].split_seed, cfg.split_seed + 1);
    write_reports(dir / "a", cfg, r);
    cfg.workers = 3;
    write_reports(dir / "b", cfg, run_experiment(cfg));
    EXPECT_EQ(slurp(dir / "a" / "runs.csv"), slurp(dir / "b" / "runs.csv"));
    EXPECT_EQ(slurp(dir / "a" / "aggregate.json"), slurp(dir / "b" / "aggregate.json"));
    const auto agg = nlohmann::json::parse(slurp(dir / "a" / "aggregate.json"));
    EXPECT_EQ(agg["runs"], 4);
    EXPECT_EQ(agg["std_denominator"], "n-1");
}

TEST(Experiment, TwoBlockPpIsPerfect) {
    const Dataset ds = preprocess(synth::two_block_dataset(30, 0.3, 0.02, 1));
    ExperimentConfig cfg;
    cfg.name = ds.name;
    cfg.variant = Variant::PP;
    cfg.splits = 2;
    cfg.inits = 2;
    cfg.train_per_class = 5;
    cfg.val_count = 10;
    cfg.max_epochs = 200;
    const auto built = build_scales(ds.graph, cfg.norm, cfg.alphas, cfg.epsilon, cfg.max_pushes, cfg.aggregator, 1);
    const auto r = run_experiment(cfg, ds, built);
    EXPECT_EQ(r.accuracy.mean, 1.0);
}

TEST(Experiment, MissingFilesFailBeforeTraining) {
    ExperimentConfig cfg;
    cfg.edges = "/nonexistent/edges";
    cfg.features = "/nonexistent/features";
    cfg.labels = "/nonexistent/labels";
    EXPECT_THROW(run_experiment(cfg), IoError);
}

TEST(Coverage, SourceShellAlwaysCovered) {
    const Graph g = testutil::random_connected_graph(60, 3);
    const auto w = normalize_adjacency(g, NormalizationKind::SymmetricSelfLoops);
    const auto st = khop_coverage_stats(g, build_appr_matrix(w, {0.2, 1e-3}));
    EXPECT_EQ(st.mean[0], 1.0);
    for (const auto& c : st.per_source) EXPECT_EQ(c[0], 1.0);
}

TEST(Coverage, TinyEpsilonCoversEverything) {
    const Graph g = testutil::random_connected_graph(15, 2);
    const auto st = khop_coverage_stats(g, build_appr_matrix(normalize_adjacency(g, NormalizationKind::RandomWalk), {0.2, 1e-12}));
    for (double c : st.mean) EXPECT_EQ(c, 1.0);
}

TEST(Coverage, ShellArithmeticOnPath) {
    const Graph g(4, {{0, 1}, {1, 2}, {2, 3}});
    // Support of row 0: {0, 1, 3}; shells from 0 are {0}, {1}, {2}, {3}.
    ApprMatrix m;
    m.matrix = SparseMatrix::from_triplets(4, 4, {{0, 0, 0.5}, {0, 1, 0.2}, {0, 3, 0.01}, {1, 1, 1.0}, {2, 2, 1.0},
                                                  {3, 3, 1.0}});
    const auto st = khop_coverage_stats(g, m);
    EXPECT_EQ(st.max_hops, 3u);
    EXPECT_EQ(st.per_source[0], (std::vector<double>{1, 1, 0, 1}));
    EXPECT_EQ(st.per_source[1][1], 0.0);
    EXPECT_EQ(st.per_source[1][3], -1.0);
    EXPECT_EQ(st.sources_with_shell[3], 2u);
    EXPECT_THROW(khop_coverage_stats(Graph(3, {}), m), DomainError);
}

TEST(Coverage, EpsilonMonotone) {
    const Graph g = synth::barabasi_albert(200, 2, 5);
    const auto w = normalize_adjacency(g, NormalizationKind::SymmetricSelfLoops);
    const auto fine = khop_coverage_stats(g, build_appr_matrix(w, {0.1, 1e-5}));
    const auto coarse = khop_coverage_stats(g, build_appr_matrix(w, {0.1, 1e-3}));
    EXPECT_TRUE(mean_curve_dominates(fine, coarse));
}

TEST(Coverage, CsvHasReferenceStepFunction) {
    const Graph g(3, {{0, 1}, {1, 2}});
    const auto st = khop_coverage_stats(g, build_appr_matrix(normalize_adjacency(g, NormalizationKind::RandomWalk), {0.5, 1e-3}));
    std::ostringstream out;
    const std::vector<CoverageStats> all{st};
    const std::vector<std::size_t> refs{1};
    write_coverage_csv(out, all, refs);
    const auto s = out.str();
    EXPECT_NE(s.find(",,reference_1,1,1\n"), std::string::npos);
    EXPECT_NE(s.find(",,reference_1,2,0\n"), std::string::npos);
    EXPECT_EQ(khop_reference_curve(2, 4), (std::vector<double>{1, 1, 1, 0, 0}));
}

TEST(Bench, ReportsEveryVariant) {
    const Dataset ds = preprocess(synth::planted_partition_dataset(2, 40, 0.2, 0.02, 6, 0.1, 1));
    const auto built = build_scales(ds.graph, NormalizationKind::SymmetricSelfLoops, std::vector<double>{0.2, 0.1}, 1e-4,
                                    1'000'000, Aggregator::Sum, 1);
    BenchOptions opt;
    opt.epochs = 5;
    opt.repeats = 2;
    opt.train_per_class = 5;
    opt.val_count = 20;
    const auto rows = bench_variants(ds, built.scales, opt);
    ASSERT_EQ(rows.size(), 5u);
    for (const auto& r : rows) {
        EXPECT_GT(r.mean_seconds_per_epoch, 0.0);
        EXPECT_GE(r.cv, 0.0);
    }
    std::ostringstream csv;
    write_bench_csv(csv, rows);
    EXPECT_NE(csv.str().find("ptp-uncached"), std::string::npos);
}
