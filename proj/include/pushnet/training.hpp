#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pushnet/dataset.hpp"
#include "pushnet/metrics.hpp"
#include "pushnet/neural.hpp"
#include "pushnet/propagation.hpp"
#include "pushnet/split.hpp"

namespace pushnet {

struct TrainOptions {
    std::size_t max_epochs = 10000;
    std::size_t patience = 100;
    // PTP/PP only: reuse SAGG(P X) across epochs. Off recomputes it every
    // epoch, for runtime comparisons.
    bool cache_propagation = true;
};

struct EpochRecord {
    double train_loss;
    double val_loss;
    double val_acc;
};

struct TrainResult {
    TrainState state;
    std::size_t epochs = 0;
    std::vector<EpochRecord> history;
    double seconds_per_epoch = 0.0;
};

/// Trains one model with Adam and early stopping. The dropout stream is
/// seeded from init_seed, so identical inputs give identical results.
inline TrainResult train_model(const ModelSpec& spec, const ScaleSet& scales, const DenseMatrix& x,
                               std::span<const Label> labels, const Split& split, std::uint64_t init_seed,
                               const TrainOptions& options = {}, PropagationCache* cache = nullptr) {
    if (split.train.empty() || split.val.empty()) throw ConfigError("train: training and validation sets must be nonempty");
    Rng init_rng(init_seed);
    Rng dropout_rng(init_seed ^ 0x9E3779B97F4A7C15ULL);
    TrainResult res;
    res.state.model = init_model(spec, init_rng);
    res.state.stopping.max_epochs = options.max_epochs;
    res.state.stopping.patience = options.patience;

    const bool cacheable = pushes_raw_features(spec.variant);
    PropagationCache local_cache;
    if (!cache) cache = &local_cache;

    const DenseMatrix* propagated = nullptr;
    if (cacheable && options.cache_propagation) propagated = &cache->get(scales, x, spec.variant);

    const auto start = std::chrono::steady_clock::now();
    while (true) {

        auto fp = forward(res.state.model, scales, x, Mode::Train, dropout_rng, propagated);
        auto lg = loss_and_gradients(res.state.model, fp, labels, split.train);
        adam_step(res.state.model.params, res.state.adam, lg.gradients, spec.learning_rate);

        const auto ev = forward(res.state.model, scales, x, Mode::Eval, dropout_rng, propagated);
        const double val_loss = cross_entropy(ev.logits, labels, split.val);
        const auto pred = predict(ev.logits);
        const double val_acc = evaluate(pred, labels, split.val, spec.classes).accuracy;
        res.history.push_back({lg.loss, val_loss, val_acc});
        if (early_stopping_update(res.state, val_acc, val_loss)) break;
    }
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    res.epochs = res.state.stopping.epoch;
    res.seconds_per_epoch = elapsed / static_cast<double>(res.epochs);
    return res;
}

/// Eval-mode class predictions of a trained model.
inline std::vector<Label> predict_nodes(const Model& model, const ScaleSet& scales, const DenseMatrix& x,
                                        PropagationCache* cache = nullptr) {
    Rng unused(0);
    const DenseMatrix* propagated = nullptr;
    if (cache && pushes_raw_features(model.spec.variant)) propagated = &cache->get(scales, x, model.spec.variant);
    return predict(forward(model, scales, x, Mode::Eval, unused, propagated).logits);
}

} // namespace pushnet
