// Acceptance checks. Prints one PASS/FAIL (or SKIP) line per criterion and
// exits nonzero if any asserted criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "gradcheck.hpp"
#include "pushnet/pushnet.hpp"
#include "test_util.hpp"

using namespace pushnet;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    enum Kind { Pass, Fail, Skip } kind;
    std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Outcome::Pass : Outcome::Fail, std::move(detail)}; }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Outcome appr_vs_oracle() {
    std::mt19937_64 rng(2024);
    double worst_ratio = 0.0;
    std::size_t checks = 0;
    for (std::size_t gi = 0; gi < 50; ++gi) {
        const std::size_t n = 10 + rng() % 191;
        const Graph g = gi % 2 == 0 ? synth::erdos_renyi_connected(n, std::min(1.0, 3.0 / static_cast<double>(n)), rng())
                                    : synth::barabasi_albert(n, 1 + rng() % 3, rng());
        const auto w = normalize_adjacency(g, NormalizationKind::RandomWalk);
        const PushOperator op(w);
        for (double alpha : {0.05, 0.1, 0.2, 0.5}) {
            const auto exact = exact_ppr_oracle(w, alpha);
            for (double eps : {1e-4, 1e-6}) {
                const auto m = build_appr_matrix(w, {alpha, eps});
                if (!m.converged()) return verdict(false, "push cap hit");
                const double err = max_abs_diff(m.matrix.to_dense(), exact);
                worst_ratio = std::max(worst_ratio, err / eps);
                ++checks;
            }
        }
    }
    return verdict(worst_ratio <= 1.0, std::to_string(checks) + " (graph, alpha, eps) cases, max error/eps = " +
                                           fmt("%.3g", worst_ratio));
}

Outcome lpmp_equivalence() {
    std::mt19937_64 rng(77);
    double worst = 0.0;
    for (std::size_t gi = 0; gi < 20; ++gi) {
        const std::size_t n = 10 + rng() % 91;
        const std::size_t h = 1 + rng() % 8;
        const Graph g = testutil::random_connected_graph(n, rng());
        const auto kind = gi % 2 ? NormalizationKind::RandomWalk : NormalizationKind::SymmetricSelfLoops;
        const auto w = normalize_adjacency(g, kind);
        const double alphas[] = {0.05, 0.1, 0.2, 0.5};
        const double alpha = alphas[rng() % 4];
        const double eps = gi % 3 == 0 ? 1e-4 : 1e-6;
        const auto x = testutil::random_dense(n, h, rng(), -1.0, 1.0);
        LpmpOptions opt;
        opt.alpha = alpha;
        opt.epsilon = eps;
        const auto lp = lpmp_propagate(w, x, opt);
        const auto p = build_appr_matrix(w, {alpha, eps});
        worst = std::max(worst, max_abs_diff(lp.output, propagate(p.matrix, x)));
    }
    return verdict(worst <= 1e-12, "20 graphs, max |LPMP - P H| = " + fmt("%.3g", worst));
}

Outcome gradients() {
    double worst = 0.0;
    std::size_t combos = 0;
    for (Variant v : {Variant::Full, Variant::PTP, Variant::PP, Variant::TPP}) {
        for (Aggregator a : {Aggregator::Sum, Aggregator::Max, Aggregator::Cat}) {
            if (v == Variant::TPP && a == Aggregator::Cat) continue;
            worst = std::max(worst, testutil::gradient_check(v, a, 1));
            ++combos;
        }
    }
    return verdict(worst <= 1e-4, std::to_string(combos) + " variant x aggregator combinations, max relative error = " +
                                      fmt("%.3g", worst));
}

Outcome sum_distributivity() {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Graph g = testutil::random_connected_graph(50 + 10 * seed, seed);
        const auto w = normalize_adjacency(g, NormalizationKind::SymmetricSelfLoops);
        std::vector<ApprMatrix> mats;
        for (double a : {0.2, 0.1, 0.05}) {
            auto m = build_appr_matrix(w, {a, 1e-4});
            m.matrix = row_l1_normalize(m.matrix);
            mats.push_back(std::move(m));
        }
        const ScaleSet s(mats, Aggregator::Sum);
        const auto h = testutil::random_dense(g.num_nodes(), 6, seed + 3);
        DenseMatrix expect(g.num_nodes(), 6);
        for (const auto& m : mats) {
            const auto part = propagate(m.matrix, h);
            for (std::size_t i = 0; i < expect.size(); ++i) expect.data()[i] += part.data()[i];
        }
        worst = std::max(worst, max_abs_diff(scale_aggregate(s, h).values, expect));
    }
    return verdict(worst <= 1e-12, "max |SAGG_sum - sum_k P_k H| = " + fmt("%.3g", worst));
}

Outcome synthetic_end_to_end() {
    std::size_t perfect = 0;
    std::size_t max_epochs = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Dataset ds = preprocess(synth::two_block_dataset(30, 0.3, 0.02, seed));
        const auto built = build_scales(ds.graph, NormalizationKind::SymmetricSelfLoops, std::vector<double>{0.2, 0.1, 0.05},
                                        1e-5, 10'000'000, Aggregator::Sum, 1);
        const Split split = sample_split(ds.labels, ds.num_classes, SplitSpec{5, 10, seed});
        const ModelSpec spec = default_spec(Variant::PP, ds.features.cols(), ds.num_classes, 3);
        TrainOptions opt;
        opt.max_epochs = 200;
        const auto tr = train_model(spec, built.scales, ds.features, ds.labels, split, seed, opt);
        const auto pred = predict_nodes(tr.state.model, built.scales, ds.features);
        const double acc = evaluate(pred, ds.labels, split.test, ds.num_classes).accuracy;
        perfect += acc == 1.0;
        max_epochs = std::max(max_epochs, tr.epochs);
    }
    return verdict(perfect == 10, std::to_string(perfect) + "/10 seeds at test accuracy 1.0, at most " +
                                      std::to_string(max_epochs) + " epochs");
}

Outcome reproduction() {
    struct Target {
        const char* env;
        const char* name;
        double reference_acc;
    };
    const Target targets[] = {{"PUSHNET_CORA_DIR", "cora", 84.23}, {"PUSHNET_CITESEER_DIR", "citeseer", 75.01}};
    std::string detail;
    bool any = false, ok = true;
    for (const auto& t : targets) {
        const char* dir = std::getenv(t.env);
        if (!dir) continue;
        any = true;
        ExperimentConfig cfg;
        cfg.name = t.name;
        cfg.edges = (fs::path(dir) / "edges.txt").string();
        cfg.features = (fs::path(dir) / "features.txt").string();
        cfg.labels = (fs::path(dir) / "labels.txt").string();
        cfg.variant = Variant::TPP;
        cfg.splits = 5;
        cfg.inits = 2;
        const auto start = std::chrono::steady_clock::now();
        const auto r = run_experiment(cfg);
        const double mins = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
        const double acc = 100.0 * r.accuracy.mean;
        const bool within = std::abs(acc - t.reference_acc) <= 3.0 && mins <= 30.0;
        ok = ok && within;
        detail += std::string(t.name) + " tpp " + fmt("%.2f", acc) + " vs " + fmt("%.2f", t.reference_acc) + " (" +
                  fmt("%.1f", mins) + " min); ";
    }
    if (!any) {
        return {Outcome::Skip, "PUSHNET_CORA_DIR / PUSHNET_CITESEER_DIR not set; best-effort criterion, reported only"};
    }
    return verdict(ok, detail + "reported only");
}

Outcome coverage_monotone() {
    const Dataset ds = preprocess(synth::planted_partition_dataset(4, 150, 0.02, 0.002, 8, 0.2, 3));
    const auto w = normalize_adjacency(ds.graph, NormalizationKind::SymmetricSelfLoops);
    const double eps = 1e-4;
    std::vector<CoverageStats> by_alpha;
    for (double a : {0.05, 0.1, 0.2, 0.5}) by_alpha.push_back(khop_coverage_stats(ds.graph, build_appr_matrix(w, {a, eps})));
    std::vector<CoverageStats> by_eps;
    for (double e : {1e-5, 1e-4, 1e-3}) by_eps.push_back(khop_coverage_stats(ds.graph, build_appr_matrix(w, {0.1, e})));
    bool ok = true;
    for (std::size_t i = 1; i < by_alpha.size(); ++i) ok = ok && mean_curve_dominates(by_alpha[i - 1], by_alpha[i], 3);
    for (std::size_t i = 1; i < by_eps.size(); ++i) ok = ok && mean_curve_dominates(by_eps[i - 1], by_eps[i], 0);
    return verdict(ok, "n=" + std::to_string(ds.graph.num_nodes()) + ", alphas {0.05,0.1,0.2,0.5} at k>=3, eps {1e-5,1e-4,1e-3} at all k");
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    const auto dir = fs::temp_directory_path() / "pushnet_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const Dataset ds = synth::planted_partition_dataset(3, 60, 0.1, 0.01, 10, 0.2, 9);
    {
        std::ofstream e(dir / "edges.txt");
        write_edge_list(e, ds.graph);
        std::ofstream f(dir / "features.txt");
        write_features_triplets(f, ds.features);
        std::ofstream l(dir / "labels.txt");
        write_labels(l, ds.labels);
    }
    bool ok = true;
    for (Variant v : {Variant::Full, Variant::PTP}) {
        ExperimentConfig cfg;
        cfg.name = "planted";
        cfg.edges = (dir / "edges.txt").string();
        cfg.features = (dir / "features.txt").string();
        cfg.labels = (dir / "labels.txt").string();
        cfg.variant = v;
        cfg.aggregator = v == Variant::Full ? Aggregator::Max : Aggregator::Sum;
        cfg.splits = 2;
        cfg.inits = 2;
        cfg.train_per_class = 10;
        cfg.val_count = 50;
        cfg.max_epochs = 80;
        cfg.patience = 30;
        const std::string tag(to_string(v));
        cfg.workers = 1;
        write_reports(dir / (tag + "_w1_a"), cfg, run_experiment(cfg));
        write_reports(dir / (tag + "_w1_b"), cfg, run_experiment(cfg));
        cfg.workers = 4;
        write_reports(dir / (tag + "_w4"), cfg, run_experiment(cfg));
        for (const char* file : {"runs.csv", "aggregate.json"}) {
            const auto ref = slurp(dir / (tag + "_w1_a") / file);
            ok = ok && !ref.empty() && ref == slurp(dir / (tag + "_w1_b") / file) && ref == slurp(dir / (tag + "_w4") / file);
        }
    }
    return verdict(ok, "runs.csv and aggregate.json byte-identical across repeats and 1 vs 4 workers");
}

Outcome early_stopping_contract() {
    for (std::size_t e_last : {1u, 3u, 57u, 250u}) {
        TrainState s;
        s.model.params.post.push_back({DenseMatrix(1, 1, 0.0), {0.0}});
        Parameters at_e;
        std::size_t stopped = 0;
        for (std::size_t e = 1; e <= 1000; ++e) {
            s.model.params.post[0].weight(0, 0) = static_cast<double>(e);
            if (e == e_last) at_e = s.model.params;
            // Strictly improving until e_last, flat and worse afterwards.
            const double acc = e <= e_last ? 0.1 + 0.001 * static_cast<double>(e) : 0.05;
            const double loss = e <= e_last ? 2.0 - 0.001 * static_cast<double>(e) : 3.0;
            if (early_stopping_update(s, acc, loss)) {
                stopped = e;
                break;
            }
        }
        if (stopped != e_last + 100 || !(s.model.params == at_e)) {
            return verdict(false, "last improvement " + std::to_string(e_last) + ", stopped at " + std::to_string(stopped));
        }
    }
    return verdict(true, "last improvement at E in {1,3,57,250}: halted at E+100 with the epoch-E snapshot restored");
}

} // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"APPR matches exact PPR within epsilon", appr_vs_oracle},
        {"LPMP equals APPR propagation within 1e-12", lpmp_equivalence},
        {"gradients match central differences", gradients},
        {"sum aggregation distributes over scales", sum_distributivity},
        {"two-block synthetic PP reaches accuracy 1.0", synthetic_end_to_end},
        {"desk-scale citation benchmark reproduction", reproduction},
        {"k-hop coverage monotone in alpha and epsilon", coverage_monotone},
        {"run reports are byte-deterministic", determinism},
        {"early stopping halts at E+100 and restores E", early_stopping_contract},
    };
    int failures = 0;
    int index = 1;
    for (const auto& [name, check] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o{Outcome::Fail, ""};
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {Outcome::Fail, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const char* tag = o.kind == Outcome::Pass ? "PASS" : o.kind == Outcome::Skip ? "SKIP" : "FAIL";
        // Criterion 6 is reported, never asserted.
        if (o.kind == Outcome::Fail && index != 6) ++failures;
        std::printf("%s criterion %d: %s | %s (%.1fs)\n", tag, index, name, o.detail.c_str(), secs);
        std::fflush(stdout);
        ++index;
    }
    return failures == 0 ? 0 : 1;
}
