#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pushnet/pushnet.hpp"

using namespace pushnet;
namespace fs = std::filesystem;

namespace {

NormalizationKind parse_norm(const std::string& s) {
    if (s == "sym") return NormalizationKind::SymmetricSelfLoops;
    if (s == "rw") return NormalizationKind::RandomWalk;
    throw ConfigError("norm must be 'sym' or 'rw'");
}

FeatureFormat parse_format(const std::string& s) {
    if (s == "triplets") return FeatureFormat::Triplets;
    if (s == "csv") return FeatureFormat::Csv;
    throw ConfigError("feature format must be 'triplets' or 'csv'");
}

ExperimentConfig load_with_overrides(const std::string& path, const std::vector<std::string>& sets) {
    ExperimentConfig cfg = path.empty() ? ExperimentConfig{} : load_config(path);
    for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        set_config_value(cfg, std::string(detail::trim(std::string_view(kv).substr(0, eq))),
                         detail::trim(std::string_view(kv).substr(eq + 1)));
    }
    return cfg;
}

Dataset load_prepared(const ExperimentConfig& cfg) {
    validate(cfg);
    return preprocess(load_dataset(cfg.edges, cfg.features, cfg.labels, cfg.feature_format, cfg.name));
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// ---------------------------------------------------------------- ingest

struct IngestArgs {
    std::string format = "generic";
    std::string edges, features, labels, feature_format = "triplets";
    std::string content, cites;
    std::string out;
    bool lcc = false;
};

// LINQS citation format: "<id> <f_1> ... <f_d> <label>" per node and
// "<cited> <citing>" per edge, with string ids. Edges naming unknown ids are dropped.
Dataset read_linqs(const std::string& content_path, const std::string& cites_path, std::size_t& dropped) {
    std::map<std::string, NodeId> ids;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> label_names;
    {
        auto in = detail::open_input(content_path);
        std::string line;
        std::size_t line_no = 0, width = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto tok = detail::split_ws(detail::trim(line));
            if (tok.empty()) continue;
            if (tok.size() < 3) throw ParseError(line_no, "content line needs an id, features and a label");
            if (rows.empty()) width = tok.size() - 2;
            if (tok.size() - 2 != width) throw ParseError(line_no, "inconsistent feature count");
            const std::string id(tok.front());
            if (ids.count(id)) throw ParseError(line_no, "duplicate node id '" + id + "'");
            ids.emplace(id, static_cast<NodeId>(rows.size()));
            std::vector<double> r;
            for (std::size_t k = 1; k + 1 < tok.size(); ++k) r.push_back(detail::parse_double(tok[k], line_no));
            rows.push_back(std::move(r));
            label_names.emplace_back(tok.back());
        }
    }
    Dataset ds;
    const std::size_t n = rows.size();
    const std::size_t d = n ? rows.front().size() : 0;
    ds.features = DenseMatrix(n, d);
    for (std::size_t i = 0; i < n; ++i) std::copy(rows[i].begin(), rows[i].end(), ds.features.row(i).begin());
    const std::set<std::string> classes(label_names.begin(), label_names.end());
    std::map<std::string, Label> class_id;
    for (const auto& c : classes) class_id.emplace(c, static_cast<Label>(class_id.size()));
    for (const auto& l : label_names) ds.labels.push_back(class_id.at(l));
    ds.num_classes = classes.size();
    std::vector<Edge> edges;
    dropped = 0;
    {
        auto in = detail::open_input(cites_path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto tok = detail::split_ws(detail::trim(line));
            if (tok.empty()) continue;
            if (tok.size() != 2) throw ParseError(line_no, "cites line needs two ids");
            const auto a = ids.find(std::string(tok[0]));
            const auto b = ids.find(std::string(tok[1]));
            if (a == ids.end() || b == ids.end()) {
                ++dropped;
                continue;
            }
            edges.emplace_back(a->second, b->second);
        }
    }
    ds.graph = Graph(n, std::move(edges));
    return ds;
}

int cmd_ingest(const IngestArgs& a) {
    Dataset ds;
    std::size_t dropped = 0;
    if (a.format == "linqs") {
        if (a.content.empty() || a.cites.empty()) throw ConfigError("ingest --format linqs needs --content and --cites");
        ds = read_linqs(a.content, a.cites, dropped);
    } else if (a.format == "generic") {
        if (a.edges.empty() || a.features.empty() || a.labels.empty()) {
            throw ConfigError("ingest needs --edges, --features and --labels");
        }
        ds = load_dataset(a.edges, a.features, a.labels, parse_format(a.feature_format));
    } else {
        throw ConfigError("ingest format must be 'generic' or 'linqs'");
    }
    const std::size_t raw_nodes = ds.graph.num_nodes();
    if (a.lcc) ds = restrict_to_largest_component(ds);
    std::error_code ec;
    fs::create_directories(a.out, ec);
    if (ec) throw IoError("cannot create '" + a.out + "'");
    {
        auto e = detail::open_output((fs::path(a.out) / "edges.txt").string());
        write_edge_list(e, ds.graph);
        auto f = detail::open_output((fs::path(a.out) / "features.txt").string());
        write_features_triplets(f, ds.features);
        auto l = detail::open_output((fs::path(a.out) / "labels.txt").string());
        write_labels(l, ds.labels);
    }
    std::printf("nodes %zu (raw %zu), edges %zu, features %zu, classes %zu, dropped edges %zu\n", ds.graph.num_nodes(),
                raw_nodes, ds.graph.num_edges(), ds.features.cols(), count_classes(ds.labels), dropped);
    return 0;
}

// ---------------------------------------------------------------- appr

struct ApprArgs {
    std::string config, edges, out, norm = "sym";
    std::vector<std::string> sets;
    double alpha = 0.1, epsilon = 1e-5;
    std::size_t workers = 1, max_pushes = 10'000'000;
    bool raw = false;
};

int cmd_appr(const ApprArgs& a) {
    Graph g;
    if (!a.edges.empty()) {
        auto in = detail::open_input(a.edges);
        g = load_edge_list(in);
        g = largest_connected_component(g).graph;
    } else {
        g = load_prepared(load_with_overrides(a.config, a.sets)).graph;
    }
    const auto w = normalize_adjacency(g, parse_norm(a.norm));
    const auto start = std::chrono::steady_clock::now();
    ApprMatrix m = build_appr_matrix(w, {a.alpha, a.epsilon, a.max_pushes}, a.workers);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!a.raw) m.matrix = row_l1_normalize(m.matrix);
    auto out = detail::open_output(a.out);
    save_appr(out, m);
    std::printf("n %zu, nnz %zu, density %s, pushes %zu, nonconverged columns %zu, seconds %s\n", m.matrix.rows(),
                m.matrix.nnz(), fmt(static_cast<double>(m.matrix.nnz()) / (static_cast<double>(m.matrix.rows()) * static_cast<double>(m.matrix.rows()))).c_str(),
                m.total_pushes, m.nonconverged_columns, fmt(secs).c_str());
    return m.converged() ? 0 : exit_code(ErrorCategory::Numerical);
}

// ---------------------------------------------------------------- train / eval

struct TrainArgs {
    std::string config, variant, out;
    std::vector<std::string> sets;
    std::uint64_t seed = 0;  // split seed
    std::uint64_t init_seed = 0;
};

int cmd_train(const TrainArgs& a) {
    auto cfg = load_with_overrides(a.config, a.sets);
    if (!a.variant.empty()) cfg.variant = parse_variant(a.variant);
    validate(cfg);
    const Dataset ds = load_prepared(cfg);
    const auto built = build_scales(ds.graph, cfg.norm, cfg.alphas, cfg.epsilon, cfg.max_pushes, cfg.aggregator, cfg.workers);
    const ModelSpec spec = cfg.model_spec(ds.features.cols(), ds.num_classes);
    const Split split = sample_split(ds.labels, ds.num_classes, {cfg.train_per_class, cfg.val_count, a.seed});
    TrainOptions opt;
    opt.max_epochs = cfg.max_epochs;
    opt.patience = cfg.patience;
    PropagationCache cache;
    const auto tr = train_model(spec, built.scales, ds.features, ds.labels, split, a.init_seed, opt, &cache);
    const auto pred = predict_nodes(tr.state.model, built.scales, ds.features, &cache);
    const auto val = evaluate(pred, ds.labels, split.val, ds.num_classes);
    const auto test = evaluate(pred, ds.labels, split.test, ds.num_classes);
    std::printf("model %s, epochs %zu, val_acc %s, test_acc %s, test_macro_f1 %s, sec/epoch %s, appr seconds %s\n",
                model_id(cfg).c_str(), tr.epochs, fmt(val.accuracy).c_str(), fmt(test.accuracy).c_str(),
                fmt(test.macro_f1).c_str(), fmt(tr.seconds_per_epoch).c_str(), fmt(built.build_seconds).c_str());
    if (!a.out.empty()) {
        Checkpoint cp{tr.state.model, cfg.alphas, cfg.epsilon, a.seed, a.init_seed};
        auto out = detail::open_output(a.out);
        save_checkpoint(out, cp);
    }
    return 0;
}

struct EvalArgs {
    std::string config, checkpoint;
    std::vector<std::string> sets;
};

int cmd_eval(const EvalArgs& a) {
    auto cfg = load_with_overrides(a.config, a.sets);
    Checkpoint cp;
    {
        auto in = detail::open_input(a.checkpoint);
        cp = load_checkpoint(in);
    }
    cfg.alphas = cp.alphas;
    cfg.epsilon = cp.epsilon;
    cfg.variant = cp.model.spec.variant;
    cfg.aggregator = cp.model.spec.aggregator;
    const Dataset ds = load_prepared(cfg);
    if (ds.features.cols() != cp.model.spec.input_dim || ds.num_classes != cp.model.spec.classes) {
        throw ConfigError("checkpoint does not match the dataset's feature width or class count");
    }
    const auto built = build_scales(ds.graph, cfg.norm, cfg.alphas, cfg.epsilon, cfg.max_pushes, cfg.aggregator, cfg.workers);
    const Split split = sample_split(ds.labels, ds.num_classes, {cfg.train_per_class, cfg.val_count, cp.split_seed});
    const auto pred = predict_nodes(cp.model, built.scales, ds.features);
    const auto test = evaluate(pred, ds.labels, split.test, ds.num_classes);
    std::printf("test_acc %s, test_macro_f1 %s, test_nodes %zu\n", fmt(test.accuracy).c_str(), fmt(test.macro_f1).c_str(),
                split.test.size());
    return 0;
}

// ---------------------------------------------------------------- run

struct RunArgs {
    std::string config, out;
    std::vector<std::string> sets;
    long workers = -1;
};

int cmd_run(const RunArgs& a) {
    auto cfg = load_with_overrides(a.config, a.sets);
    if (a.workers >= 0) cfg.workers = static_cast<std::size_t>(a.workers);
    if (!a.out.empty()) cfg.output_dir = a.out;
    const auto r = run_experiment(cfg);
    write_reports(cfg.output_dir, cfg, r);
    std::printf("%s: %zu runs, accuracy %.2f +- %.2f, macro-F1 %.2f +- %.2f, appr seconds %s -> %s\n",
                model_id(cfg).c_str(), r.runs.size(), 100.0 * r.accuracy.mean, 100.0 * r.accuracy.std,
                100.0 * r.macro_f1.mean, 100.0 * r.macro_f1.std, fmt(r.appr_build_seconds).c_str(),
                cfg.output_dir.c_str());
    return 0;
}

// ---------------------------------------------------------------- stats

struct StatsArgs {
    std::string config, edges, out, norm = "sym";
    std::vector<std::string> sets;
    std::vector<double> alphas{0.2, 0.1, 0.05};
    std::vector<double> epsilons{1e-5};
    std::vector<std::size_t> reference_hops{2};
    bool per_source = false;
    bool lpmp_check = false;
    std::size_t workers = 1;
    double tolerance = 1e-12;
};

int cmd_stats(const StatsArgs& a) {
    Dataset ds;
    if (!a.edges.empty()) {
        auto in = detail::open_input(a.edges);
        ds.graph = largest_connected_component(load_edge_list(in)).graph;
    } else {
        ds = load_prepared(load_with_overrides(a.config, a.sets));
    }
    const auto w = normalize_adjacency(ds.graph, parse_norm(a.norm));
    if (a.lpmp_check) {
        DenseMatrix h = ds.features;
        if (h.empty()) {
            std::mt19937_64 rng(0);
            h = DenseMatrix(ds.graph.num_nodes(), 4);
            for (double& v : h.data()) v = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        }
        bool ok = true;
        for (double alpha : a.alphas) {
            for (double eps : a.epsilons) {
                LpmpOptions opt;
                opt.alpha = alpha;
                opt.epsilon = eps;
                opt.workers = a.workers;
                const auto lp = lpmp_propagate(w, h, opt);
                const auto p = build_appr_matrix(w, {alpha, eps}, a.workers);
                const double diff = max_abs_diff(lp.output, propagate(p.matrix, h, a.workers));
                const bool pass = diff <= a.tolerance;
                ok = ok && pass;
                std::printf("lpmp-check alpha %s eps %s: max |lpmp - P h| = %s %s\n", fmt(alpha).c_str(), fmt(eps).c_str(),
                            fmt(diff).c_str(), pass ? "PASS" : "FAIL");
            }
        }
        return ok ? 0 : exit_code(ErrorCategory::Numerical);
    }
    std::vector<CoverageStats> stats;
    for (double eps : a.epsilons) {
        for (double alpha : a.alphas) {
            stats.push_back(khop_coverage_stats(ds.graph, build_appr_matrix(w, {alpha, eps}, a.workers)));
            const auto& s = stats.back();
            std::printf("alpha %s eps %s: mean coverage", fmt(alpha).c_str(), fmt(eps).c_str());
            for (std::size_t k = 0; k < std::min<std::size_t>(s.mean.size(), 8); ++k) std::printf(" k%zu=%.4f", k, s.mean[k]);
            std::printf("\n");
        }
    }
    if (!a.out.empty()) {
        auto out = detail::open_output(a.out);
        write_coverage_csv(out, stats, a.reference_hops, a.per_source);
    }
    return 0;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
    std::string config, out;
    std::vector<std::string> sets;
    BenchOptions opt;
};

int cmd_bench(const BenchArgs& a) {
    const auto cfg = load_with_overrides(a.config, a.sets);
    const Dataset ds = load_prepared(cfg);
    const auto built = build_scales(ds.graph, cfg.norm, cfg.alphas, cfg.epsilon, cfg.max_pushes, cfg.aggregator, cfg.workers);
    BenchOptions opt = a.opt;
    opt.train_per_class = cfg.train_per_class;
    opt.val_count = cfg.val_count;
    const auto rows = bench_variants(ds, built.scales, opt);
    write_bench_csv(std::cout, rows);
    if (!a.out.empty()) {
        auto out = detail::open_output(a.out);
        write_bench_csv(out, rows);
    }
    return 0;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
    std::string kind = "two-block", out;
    std::uint64_t seed = 0;
    std::size_t classes = 3, block = 100, dim = 16;
    double p_in = 0.3, p_out = 0.02, noise = 0.2;
};

int cmd_synth(const SynthArgs& a) {
    Dataset ds;
    if (a.kind == "two-block") ds = synth::two_block_dataset(a.block, a.p_in, a.p_out, a.seed);
    else if (a.kind == "planted") ds = synth::planted_partition_dataset(a.classes, a.block, a.p_in, a.p_out, a.dim, a.noise, a.seed);
    else throw ConfigError("synth kind must be 'two-block' or 'planted'");
    std::error_code ec;
    fs::create_directories(a.out, ec);
    if (ec) throw IoError("cannot create '" + a.out + "'");
    auto e = detail::open_output((fs::path(a.out) / "edges.txt").string());
    write_edge_list(e, ds.graph);
    auto f = detail::open_output((fs::path(a.out) / "features.txt").string());
    write_features_triplets(f, ds.features);
    auto l = detail::open_output((fs::path(a.out) / "labels.txt").string());
    write_labels(l, ds.labels);
    std::printf("nodes %zu, edges %zu, classes %zu\n", ds.graph.num_nodes(), ds.graph.num_edges(), ds.num_classes);
    return 0;
}

int report(ErrorCategory c, const std::string& msg) {
    std::fprintf(stderr, "error[%s]: %s\n", std::string(category_name(c)).c_str(), msg.c_str());
    return exit_code(c);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Push-based graph neural network toolkit"};
    app.require_subcommand(1);

    IngestArgs ingest;
    auto* ci = app.add_subcommand("ingest", "convert raw dataset files to the canonical layout");
    ci->add_option("--format", ingest.format, "generic | linqs");
    ci->add_option("--edges", ingest.edges);
    ci->add_option("--features", ingest.features);
    ci->add_option("--labels", ingest.labels);
    ci->add_option("--feature-format", ingest.feature_format, "triplets | csv");
    ci->add_option("--content", ingest.content, "LINQS .content file");
    ci->add_option("--cites", ingest.cites, "LINQS .cites file");
    ci->add_flag("--lcc", ingest.lcc, "keep only the largest connected component");
    ci->add_option("--out", ingest.out, "output directory")->required();

    ApprArgs appr;
    auto* ca = app.add_subcommand("appr", "build and save an APPR matrix");
    ca->add_option("--config", appr.config);
    ca->add_option("--set", appr.sets, "config override key=value");
    ca->add_option("--edges", appr.edges, "edge list (instead of --config)");
    ca->add_option("--alpha", appr.alpha);
    ca->add_option("--epsilon", appr.epsilon);
    ca->add_option("--norm", appr.norm, "sym | rw");
    ca->add_option("--max-pushes", appr.max_pushes);
    ca->add_option("--workers", appr.workers);
    ca->add_flag("--raw", appr.raw, "skip row L1 normalization");
    ca->add_option("--out", appr.out)->required();

    TrainArgs train;
    auto* ct = app.add_subcommand("train", "train one model on one split");
    ct->add_option("--config", train.config)->required();
    ct->add_option("--set", train.sets, "config override key=value");
    ct->add_option("--variant", train.variant, "full | ptp | pp | tpp");
    ct->add_option("--seed", train.seed, "split seed");
    ct->add_option("--init-seed", train.init_seed);
    ct->add_option("--out", train.out, "checkpoint path");

    EvalArgs eval;
    auto* ce = app.add_subcommand("eval", "evaluate a checkpoint on its test split");
    ce->add_option("--config", eval.config)->required();
    ce->add_option("--set", eval.sets, "config override key=value");
    ce->add_option("--checkpoint", eval.checkpoint)->required();

    RunArgs run;
    auto* cr = app.add_subcommand("run", "all splits x inits with reports");
    cr->add_option("--config", run.config)->required();
    cr->add_option("--set", run.sets, "config override key=value");
    cr->add_option("--out", run.out, "report directory (default: output_dir from config)");
    cr->add_option("--workers", run.workers);

    StatsArgs stats;
    auto* cs = app.add_subcommand("stats", "k-hop coverage curves or the LPMP equivalence check");
    cs->add_option("--config", stats.config);
    cs->add_option("--set", stats.sets, "config override key=value");
    cs->add_option("--edges", stats.edges, "edge list (instead of --config)");
    cs->add_option("--alpha", stats.alphas);
    cs->add_option("--epsilon", stats.epsilons);
    cs->add_option("--norm", stats.norm, "sym | rw");
    cs->add_option("--reference-hops", stats.reference_hops);
    cs->add_flag("--per-source", stats.per_source);
    cs->add_flag("--lpmp-check", stats.lpmp_check);
    cs->add_option("--tolerance", stats.tolerance);
    cs->add_option("--workers", stats.workers);
    cs->add_option("--out", stats.out, "coverage CSV");

    BenchArgs bench;
    auto* cb = app.add_subcommand("bench", "per-epoch timing of every variant");
    cb->add_option("--config", bench.config)->required();
    cb->add_option("--set", bench.sets, "config override key=value");
    cb->add_option("--epochs", bench.opt.epochs);
    cb->add_option("--repeats", bench.opt.repeats);
    cb->add_option("--seed", bench.opt.seed);
    cb->add_option("--out", bench.out);

    SynthArgs syn;
    auto* cy = app.add_subcommand("synth", "write a synthetic dataset");
    cy->add_option("--kind", syn.kind, "two-block | planted");
    cy->add_option("--seed", syn.seed);
    cy->add_option("--classes", syn.classes);
    cy->add_option("--block", syn.block, "nodes per block");
    cy->add_option("--dim", syn.dim);
    cy->add_option("--p-in", syn.p_in);
    cy->add_option("--p-out", syn.p_out);
    cy->add_option("--noise", syn.noise);
    cy->add_option("--out", syn.out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report(ErrorCategory::Config, e.what());
    }

    try {
        if (*ci) return cmd_ingest(ingest);
        if (*ca) {
            if (appr.edges.empty() && appr.config.empty()) throw ConfigError("appr needs --edges or --config");
            return cmd_appr(appr);
        }
        if (*ct) return cmd_train(train);
        if (*ce) return cmd_eval(eval);
        if (*cr) return cmd_run(run);
        if (*cs) {
            if (stats.edges.empty() && stats.config.empty()) throw ConfigError("stats needs --edges or --config");
            return cmd_stats(stats);
        }
        if (*cb) return cmd_bench(bench);
        if (*cy) return cmd_synth(syn);
    } catch (const Error& e) {
        return report(e.category(), e.what());
    } catch (const std::bad_alloc&) {
        return report(ErrorCategory::Numerical, "out of memory");
    } catch (const std::exception& e) {
        return report(ErrorCategory::Io, e.what());
    }
    return 0;
}
