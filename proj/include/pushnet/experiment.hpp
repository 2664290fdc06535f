#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pushnet/appr.hpp"
#include "pushnet/config.hpp"
#include "pushnet/dataset.hpp"
#include "pushnet/metrics.hpp"
#include "pushnet/parallel.hpp"
#include "pushnet/propagation.hpp"
#include "pushnet/split.hpp"
#include "pushnet/training.hpp"

namespace pushnet {

/// Preprocessing: largest connected component, then L1-normalized features.
/// Unlabeled nodes stay in the graph but never enter a split.
inline Dataset preprocess(const Dataset& raw) {
    Dataset ds = restrict_to_largest_component(raw);
    ds.features = l1_normalize_features(ds.features);
    return ds;
}

struct BuiltScales {
    ScaleSet scales;
    double build_seconds = 0.0;
    std::size_t nonconverged_columns = 0;
};

/// Builds one row-L1-normalized APPR matrix per alpha.
inline BuiltScales build_scales(const Graph& g, NormalizationKind norm, std::span<const double> alphas, double epsilon,
                                std::size_t max_pushes, Aggregator agg, std::size_t workers) {
    const auto start = std::chrono::steady_clock::now();
    const SparseMatrix w = normalize_adjacency(g, norm);
    std::vector<ApprMatrix> mats;
    std::size_t nonconverged = 0;
    for (double a : alphas) {
        ApprMatrix m = build_appr_matrix(w, ApprParams{a, epsilon, max_pushes}, workers);
        nonconverged += m.nonconverged_columns;
        m.matrix = row_l1_normalize(m.matrix);
        mats.push_back(std::move(m));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return BuiltScales{ScaleSet(std::move(mats), agg), secs, nonconverged};
}

struct RunReport {
    std::string dataset;
    std::string model;
    std::size_t split_index = 0;
    std::size_t init_index = 0;
    std::uint64_t split_seed = 0;
    std::uint64_t init_seed = 0;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::size_t epochs = 0;
    double seconds_per_epoch = 0.0;
    double appr_build_seconds = 0.0;
};

struct ExperimentResult {
    std::vector<RunReport> runs;
    Summary accuracy;
    Summary macro_f1;
    Summary epochs;
    double appr_build_seconds = 0.0;
    std::size_t nonconverged_columns = 0;
};

inline std::string model_id(const ExperimentConfig& c) {
    return std::string(to_string(c.variant)) + "-" + std::string(to_string(c.aggregator));
}

inline std::uint64_t split_seed_for(const ExperimentConfig& c, std::size_t s) { return c.split_seed + s; }
inline std::uint64_t init_seed_for(const ExperimentConfig& c, std::size_t i) { return c.init_seed + i; }

/// Every split x init run on preprocessed data with prebuilt scales. Runs are
/// independent and may execute concurrently; results come back in run order.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& ds, const BuiltScales& built,
                                       std::size_t workers = 1) {
    const ModelSpec spec = cfg.model_spec(ds.features.cols(), ds.num_classes);
    validate(spec);
    std::vector<Split> splits;
    for (std::size_t s = 0; s < cfg.splits; ++s) {
        splits.push_back(sample_split(ds.labels, ds.num_classes,
                                      SplitSpec{cfg.train_per_class, cfg.val_count, split_seed_for(cfg, s)}));
    }
    PropagationCache shared;
    if (pushes_raw_features(spec.variant)) shared.get(built.scales, ds.features, spec.variant, workers);

    ExperimentResult res;
    res.appr_build_seconds = built.build_seconds;
    res.nonconverged_columns = built.nonconverged_columns;
    res.runs.resize(cfg.splits * cfg.inits);
    TrainOptions opt;
    opt.max_epochs = cfg.max_epochs;
    opt.patience = cfg.patience;
    parallel_for(res.runs.size(), workers, [&](std::size_t r) {
        const std::size_t s = r / cfg.inits;
        const std::size_t i = r % cfg.inits;
        PropagationCache cache = shared;
        const auto tr = train_model(spec, built.scales, ds.features, ds.labels, splits[s], init_seed_for(cfg, i), opt, &cache);
        const auto pred = predict_nodes(tr.state.model, built.scales, ds.features, &cache);
        const auto sc = evaluate(pred, ds.labels, splits[s].test, ds.num_classes);
        RunReport rep;
        rep.dataset = cfg.name;
        rep.model = model_id(cfg);
        rep.split_index = s;
        rep.init_index = i;
        rep.split_seed = split_seed_for(cfg, s);
        rep.init_seed = init_seed_for(cfg, i);
        rep.accuracy = sc.accuracy;
        rep.macro_f1 = sc.macro_f1;
        rep.epochs = tr.epochs;
        rep.seconds_per_epoch = tr.seconds_per_epoch;
        rep.appr_build_seconds = built.build_seconds;
        res.runs[r] = rep;
    });
    std::vector<double> acc, f1, ep;
    for (const auto& r : res.runs) {
        acc.push_back(r.accuracy);
        f1.push_back(r.macro_f1);
        ep.push_back(static_cast<double>(r.epochs));
    }
    res.accuracy = summarize(acc);
    res.macro_f1 = summarize(f1);
    res.epochs = summarize(ep);
    return res;
}

/// Loads, preprocesses and runs the configured experiment end to end.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    validate(cfg);
    const Dataset ds = preprocess(load_dataset(cfg.edges, cfg.features, cfg.labels, cfg.feature_format, cfg.name));
    const auto built = build_scales(ds.graph, cfg.norm, cfg.alphas, cfg.epsilon, cfg.max_pushes, cfg.aggregator, cfg.workers);
    return run_experiment(cfg, ds, built, cfg.workers);
}

namespace detail {

inline std::string fmt_metric(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

} // namespace detail

/// runs.csv: one deterministic row per run (no wall-clock fields).
inline void write_runs_csv(std::ostream& out, const ExperimentResult& r) {
    out << "dataset,model,split,init,split_seed,init_seed,accuracy,macro_f1,epochs\n";
    for (const auto& x : r.runs) {
        out << x.dataset << ',' << x.model << ',' << x.split_index << ',' << x.init_index << ',' << x.split_seed << ','
            << x.init_seed << ',' << detail::fmt_metric(x.accuracy) << ',' << detail::fmt_metric(x.macro_f1) << ','
            << x.epochs << '\n';
    }
}

inline nlohmann::json aggregate_json(const ExperimentConfig& cfg, const ExperimentResult& r) {
    const auto summary = [](const Summary& s) { return nlohmann::json{{"mean", s.mean}, {"std", s.std}}; };
    return nlohmann::json{{"dataset", cfg.name},
                          {"model", model_id(cfg)},
                          {"alphas", cfg.alphas},
                          {"epsilon", cfg.epsilon},
                          {"splits", cfg.splits},
                          {"inits", cfg.inits},
                          {"runs", r.runs.size()},
                          {"accuracy", summary(r.accuracy)},
                          {"macro_f1", summary(r.macro_f1)},
                          {"epochs", summary(r.epochs)},
                          {"std_denominator", "n-1"},
                          {"nonconverged_appr_columns", r.nonconverged_columns}};
}

/// timing.csv: wall-clock measurements, kept apart from the reproducible reports.
inline void write_timing_csv(std::ostream& out, const ExperimentResult& r) {
    out << "split,init,seconds_per_epoch,appr_build_seconds\n";
    for (const auto& x : r.runs) {
        out << x.split_index << ',' << x.init_index << ',' << detail::fmt_metric(x.seconds_per_epoch) << ','
            << detail::fmt_metric(x.appr_build_seconds) << '\n';
    }
}

inline void write_reports(const std::filesystem::path& dir, const ExperimentConfig& cfg, const ExperimentResult& r) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "'");
    {
        auto out = detail::open_output((dir / "runs.csv").string());
        write_runs_csv(out, r);
    }
    {
        auto out = detail::open_output((dir / "aggregate.json").string());
        out << aggregate_json(cfg, r).dump(2) << '\n';
    }
    {
        auto out = detail::open_output((dir / "timing.csv").string());
        write_timing_csv(out, r);
    }
}

} // namespace pushnet
