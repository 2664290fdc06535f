#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "pushnet/config.hpp"
#include "pushnet/dataset.hpp"
#include "pushnet/metrics.hpp"
#include "pushnet/propagation.hpp"
#include "pushnet/split.hpp"
#include "pushnet/training.hpp"

namespace pushnet {

struct BenchOptions {
    std::size_t epochs = 50;   // fixed epoch budget per repeat; early stopping disabled
    std::size_t repeats = 5;
    std::uint64_t seed = 0;
    std::size_t train_per_class = 20;
    std::size_t val_count = 500;
};

struct BenchRow {
    std::string label;
    double mean_seconds_per_epoch = 0.0;
    double cv = 0.0;  // std / mean over repeats
    std::size_t repeats = 0;
};

/// Mean wall-clock per epoch of one model setup. For push-first variants the
/// propagation cache is warmed before timing unless cache_propagation is off.
inline BenchRow bench_model(const std::string& label, const ModelSpec& spec, const ScaleSet& scales, const Dataset& ds,
                            const Split& split, const BenchOptions& opt, bool cache_propagation = true) {
    PropagationCache cache;
    if (cache_propagation && pushes_raw_features(spec.variant)) cache.get(scales, ds.features, spec.variant);
    TrainOptions to;
    to.max_epochs = opt.epochs;
    to.patience = opt.epochs + 1;
    to.cache_propagation = cache_propagation;
    std::vector<double> per_epoch;
    for (std::size_t r = 0; r < opt.repeats; ++r) {
        const auto tr = train_model(spec, scales, ds.features, ds.labels, split, opt.seed + r, to, &cache);
        per_epoch.push_back(tr.seconds_per_epoch);
    }
    const auto s = summarize(per_epoch);
    return BenchRow{label, s.mean, s.mean > 0.0 ? s.std / s.mean : 0.0, opt.repeats};
}

/// Times every variant with its default hyperparameters, plus PTP with the
/// propagation cache disabled.
inline std::vector<BenchRow> bench_variants(const Dataset& ds, const ScaleSet& scales, const BenchOptions& opt) {
    const Split split = sample_split(ds.labels, ds.num_classes, SplitSpec{opt.train_per_class, opt.val_count, opt.seed});
    std::vector<BenchRow> rows;
    for (Variant v : {Variant::Full, Variant::PTP, Variant::PP, Variant::TPP}) {
        Aggregator agg = scales.aggregator();
        if (v == Variant::TPP && agg == Aggregator::Cat) agg = Aggregator::Sum;
        ModelSpec spec = default_spec(v, ds.features.cols(), ds.num_classes, scales.size(), agg);
        if (agg != scales.aggregator()) {
            const ScaleSet alt(scales.scales(), agg);
            rows.push_back(bench_model(std::string(to_string(v)), spec, alt, ds, split, opt));
        } else {
            rows.push_back(bench_model(std::string(to_string(v)), spec, scales, ds, split, opt));
        }
    }
    const ModelSpec ptp = default_spec(Variant::PTP, ds.features.cols(), ds.num_classes, scales.size(), scales.aggregator());
    rows.push_back(bench_model("ptp-uncached", ptp, scales, ds, split, opt, false));
    return rows;
}

inline void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
    out << "model,mean_seconds_per_epoch,cv,repeats\n";
    for (const auto& r : rows) {
        out << r.label << ',' << detail::format_double(r.mean_seconds_per_epoch) << ',' << detail::format_double(r.cv)
            << ',' << r.repeats << '\n';
    }
}

} // namespace pushnet
