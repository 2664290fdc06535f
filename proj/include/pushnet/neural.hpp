#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pushnet/dataset.hpp"
#include "pushnet/dense_matrix.hpp"
#include "pushnet/error.hpp"
#include "pushnet/propagation.hpp"
#include "pushnet/sparse_matrix.hpp"
#include "pushnet/variant.hpp"

namespace pushnet {

using Rng = std::mt19937_64;

struct ModelSpec {
    Variant variant = Variant::Full;
    std::size_t input_dim = 0;
    std::size_t hidden = 64;  // ignored by PP
    std::size_t classes = 0;
    Aggregator aggregator = Aggregator::Sum;
    std::size_t num_scales = 1;
    double dropout = 0.5;
    double l2 = 0.01;
    double learning_rate = 0.005;
    // Test hook: f = g = id. The model has no parameters and its logits are
    // the aggregated propagated inputs.
    bool identity_transforms = false;

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Tuned defaults for each variant (hidden size, learning rate, dropout, L2).
inline ModelSpec default_spec(Variant v, std::size_t input_dim, std::size_t classes, std::size_t num_scales = 3,
                              Aggregator agg = Aggregator::Sum) {
    ModelSpec s;
    s.variant = v;
    s.input_dim = input_dim;
    s.classes = classes;
    s.num_scales = num_scales;
    s.aggregator = agg;
    switch (v) {
        case Variant::Full:
            s.hidden = 64, s.learning_rate = 0.005, s.dropout = 0.5, s.l2 = 0.01;
            break;
        case Variant::PTP:
            s.hidden = 64, s.learning_rate = 0.005, s.dropout = 0.3, s.l2 = 0.1;
            break;
        case Variant::PP:
            s.hidden = 0, s.learning_rate = 0.01, s.dropout = 0.6, s.l2 = 0.001;
            break;
        case Variant::TPP:
            s.hidden = 32, s.learning_rate = 0.01, s.dropout = 0.5, s.l2 = 0.01;
            break;
    }
    return s;
}

inline void validate(const ModelSpec& s) {
    if (s.input_dim == 0) throw ConfigError("model: input dimension must be positive");
    if (s.classes == 0) throw ConfigError("model: class count must be positive");
    if (s.num_scales == 0) throw ConfigError("model: at least one scale is required");
    if (!(s.dropout >= 0.0 && s.dropout < 1.0)) throw ConfigError("model: dropout must lie in [0, 1)");
    if (!(s.l2 >= 0.0)) throw ConfigError("model: L2 strength must be nonnegative");
    if (!(s.learning_rate > 0.0)) throw ConfigError("model: learning rate must be positive");
    if (s.variant == Variant::TPP && s.aggregator == Aggregator::Cat) {
        throw ConfigError("model: cat aggregation is not applicable to the tpp variant");
    }
    if (s.identity_transforms) return;
    if (s.variant != Variant::PP && s.hidden == 0) {
        throw ConfigError("model: variant '" + std::string(to_string(s.variant)) + "' needs a hidden layer");
    }
}

/// Dense layer y = x W + b with W of shape in x out.
struct DenseLayer {
    DenseMatrix weight;
    std::vector<double> bias;

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Layers applied before propagation (f) and after it (g).
struct Parameters {
    std::vector<DenseLayer> pre;
    std::vector<DenseLayer> post;

    friend bool operator==(const Parameters&, const Parameters&) = default;

    /// Weight and bias buffers in a fixed order: pre layers then post layers,
    /// weight before bias.
    std::vector<std::span<double>> tensors() {
        std::vector<std::span<double>> out;
        for (auto* group : {&pre, &post}) {
            for (auto& l : *group) {
                out.emplace_back(l.weight.data());
                out.emplace_back(l.bias);
            }
        }
        return out;
    }

    std::vector<std::span<const double>> tensors() const {
        std::vector<std::span<const double>> out;
        for (const auto* group : {&pre, &post}) {
            for (const auto& l : *group) {
                out.emplace_back(l.weight.data());
                out.emplace_back(l.bias);
            }
        }
        return out;
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (auto t : tensors()) n += t.size();
        return n;
    }
};

struct LayerShape {
    std::size_t in;
    std::size_t out;
};

struct Architecture {
    std::vector<LayerShape> pre;
    std::vector<LayerShape> post;
    bool pre_final_relu = true;
};

inline Architecture architecture(const ModelSpec& s) {
    Architecture a;
    if (s.identity_transforms) return a;
    const auto agg_width = [&](std::size_t w) { return s.aggregator == Aggregator::Cat ? w * s.num_scales : w; };
    switch (s.variant) {
        case Variant::Full:
            a.pre = {{s.input_dim, s.hidden}};
            a.post = {{agg_width(s.hidden), s.classes}};
            break;
        case Variant::PTP:
            a.post = {{agg_width(s.input_dim), s.hidden}, {s.hidden, s.classes}};
            break;
        case Variant::PP:
            a.post = {{agg_width(s.input_dim), s.classes}};
            break;
        case Variant::TPP:
            // f predicts class scores, so its last layer is linear with width c.
            a.pre = {{s.input_dim, s.hidden}, {s.hidden, s.classes}};
            a.pre_final_relu = false;
            break;
    }
    return a;
}

namespace detail {

inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline DenseLayer glorot_layer(LayerShape shape, Rng& rng) {
    DenseLayer l;
    l.weight = DenseMatrix(shape.in, shape.out);
    l.bias.assign(shape.out, 0.0);
    const double limit = std::sqrt(6.0 / static_cast<double>(shape.in + shape.out));
    for (double& w : l.weight.data()) w = (2.0 * uniform01(rng) - 1.0) * limit;
    return l;
}

} // namespace detail

struct Model {
    ModelSpec spec;
    Parameters params;
};

/// Glorot-uniform weights, zero biases.
inline Model init_model(const ModelSpec& spec, Rng& rng) {
    validate(spec);
    Model m;
    m.spec = spec;
    const auto arch = architecture(spec);
    for (const auto& s : arch.pre) m.params.pre.push_back(detail::glorot_layer(s, rng));
    for (const auto& s : arch.post) m.params.post.push_back(detail::glorot_layer(s, rng));
    return m;
}

enum class Mode { Train, Eval };

/// Inverted dropout on a dense matrix. Returns the per-entry scale mask
/// (0 or 1/(1-rate)) and applies it in place.
inline DenseMatrix apply_dropout(DenseMatrix& x, double rate, Rng& rng) {
    DenseMatrix mask(x.rows(), x.cols());
    const double keep = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double m = detail::uniform01(rng) < rate ? 0.0 : keep;
        mask.data()[i] = m;
        x.data()[i] *= m;
    }
    return mask;
}

/// Drops stored entries of a sparse matrix i.i.d. and rescales the survivors.
/// Dropped entries stay in the pattern with value 0.
inline SparseMatrix sparse_dropout(const SparseMatrix& p, double rate, Rng& rng) {
    std::vector<double> vals = p.values();
    const double keep = 1.0 / (1.0 - rate);
    for (double& v : vals) v = detail::uniform01(rng) < rate ? 0.0 : v * keep;
    return p.with_values(std::move(vals));
}

struct LayerTrace {
    DenseMatrix mask;    // dropout mask applied to the input, empty if none
    DenseMatrix input;   // after dropout
    DenseMatrix output;  // after activation
    bool relu = false;
};

struct ForwardPass {
    std::vector<LayerTrace> pre;
    std::vector<LayerTrace> post;
    std::vector<SparseMatrix> matrices;  // matrices propagated over (after dropout)
    bool propagates_parameters = false;  // whether gradients flow back through propagation
    Aggregated aggregated;
    DenseMatrix logits;
    DenseMatrix probabilities;
};

namespace detail {

inline LayerTrace dense_forward(const DenseLayer& layer, DenseMatrix input, bool relu, double dropout, Mode mode,
                                Rng& rng) {
    LayerTrace t;
    t.relu = relu;
    if (mode == Mode::Train && dropout > 0.0) t.mask = apply_dropout(input, dropout, rng);
    t.input = std::move(input);
    t.output = matmul(t.input, layer.weight);
    for (std::size_t i = 0; i < t.output.rows(); ++i) {
        auto row = t.output.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) {
            row[j] += layer.bias[j];
            if (relu && row[j] < 0.0) row[j] = 0.0;
        }
    }
    return t;
}

inline DenseMatrix softmax_rows(const DenseMatrix& logits) {
    DenseMatrix p(logits.rows(), logits.cols());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const auto z = logits.row(i);
        const double m = *std::max_element(z.begin(), z.end());
        double s = 0.0;
        auto out = p.row(i);
        for (std::size_t j = 0; j < z.size(); ++j) s += (out[j] = std::exp(z[j] - m));
        for (double& v : out) v /= s;
    }
    return p;
}

} // namespace detail

/// Forward pass. For PTP and PP, `propagated` may hold the cached SAGG(P X);
/// without it the propagation is recomputed.
inline ForwardPass forward(const Model& model, const ScaleSet& scales, const DenseMatrix& x, Mode mode, Rng& rng,
                           const DenseMatrix* propagated = nullptr) {
    const auto& spec = model.spec;
    if (x.rows() != scales.num_nodes()) throw ConfigError("forward: feature rows must equal node count");
    if (x.cols() != spec.input_dim) throw ConfigError("forward: feature width does not match model input");
    if (scales.size() != spec.num_scales || scales.aggregator() != spec.aggregator) {
        throw ConfigError("forward: scale set does not match model configuration");
    }
    if (spec.variant == Variant::TPP && scales.aggregator() == Aggregator::Cat) {
        throw ConfigError("forward: cat aggregation is not applicable to the tpp variant");
    }
    const auto arch = architecture(spec);
    const double rate = spec.dropout;
    ForwardPass fp;

    const bool cached_input = pushes_raw_features(spec.variant) || spec.identity_transforms;
    if (cached_input) {
        if (propagated) {
            if (propagated->rows() != x.rows() || propagated->cols() != scales.output_width(x.cols())) {
                throw ConfigError("forward: cached propagation has the wrong shape");
            }
            fp.aggregated.values = *propagated;
        } else {
            fp.aggregated = scale_aggregate(scales, x);
        }
    } else {
        DenseMatrix h = x;
        for (std::size_t l = 0; l < model.params.pre.size(); ++l) {
            const bool relu = l + 1 < model.params.pre.size() || arch.pre_final_relu;
            fp.pre.push_back(detail::dense_forward(model.params.pre[l], std::move(h), relu, rate, mode, rng));
            h = fp.pre.back().output;
        }
        fp.matrices = scales.propagation_matrices();
        if (mode == Mode::Train && rate > 0.0) {
            for (auto& m : fp.matrices) m = sparse_dropout(m, rate, rng);
        }
        const Aggregator agg = spec.aggregator;
        fp.aggregated = aggregate_scales(fp.matrices, agg, h);
        fp.propagates_parameters = true;
    }

    DenseMatrix h = fp.aggregated.values;
    for (std::size_t l = 0; l < model.params.post.size(); ++l) {
        const bool relu = l + 1 < model.params.post.size();
        fp.post.push_back(detail::dense_forward(model.params.post[l], std::move(h), relu, rate, mode, rng));
        h = fp.post.back().output;
    }
    fp.logits = std::move(h);
    if (fp.logits.cols() != spec.classes && !spec.identity_transforms) {
        throw ConfigError("forward: output width does not match class count");
    }
    fp.probabilities = detail::softmax_rows(fp.logits);
    return fp;
}

/// Mean cross-entropy of the softmax over the given nodes.
inline double cross_entropy(const DenseMatrix& logits, std::span<const Label> labels, std::span<const NodeId> nodes) {
    if (nodes.empty()) throw DomainError("cross_entropy: empty node set");
    double total = 0.0;
    for (NodeId i : nodes) {
        const auto z = logits.row(i);
        const Label y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= z.size()) {
            throw DomainError("cross_entropy: label " + std::to_string(y) + " outside 0.." +
                              std::to_string(z.size() - 1));
        }
        const double m = *std::max_element(z.begin(), z.end());
        double s = 0.0;
        for (double v : z) s += std::exp(v - m);
        total += std::log(s) + m - z[static_cast<std::size_t>(y)];
    }
    return total / static_cast<double>(nodes.size());
}

inline double l2_penalty(const Parameters& p, double strength) {
    double s = 0.0;
    for (const auto* group : {&p.pre, &p.post}) {
        for (const auto& l : *group) {
            for (double w : l.weight.data()) s += w * w;
        }
    }
    return strength * s;
}

struct LossAndGradients {
    double loss = 0.0;
    Parameters gradients;
};

namespace detail {

// Back through one dense layer: accumulates dW, db and returns the gradient
// with respect to the layer's input before dropout.
inline DenseMatrix dense_backward(const DenseLayer& layer, const LayerTrace& t, DenseMatrix grad, double l2,
                                  DenseLayer& out, bool need_input_grad = true) {
    if (t.relu) {
        for (std::size_t i = 0; i < grad.size(); ++i) {
            if (t.output.data()[i] <= 0.0) grad.data()[i] = 0.0;
        }
    }
    out.weight = matmul_transposed_lhs(t.input, grad);
    for (std::size_t i = 0; i < out.weight.size(); ++i) out.weight.data()[i] += 2.0 * l2 * layer.weight.data()[i];
    out.bias.assign(grad.cols(), 0.0);
    for (std::size_t i = 0; i < grad.rows(); ++i) {
        const auto r = grad.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) out.bias[j] += r[j];
    }
    if (!need_input_grad) return {};
    DenseMatrix gin = matmul_transposed_rhs(grad, layer.weight);
    if (!t.mask.empty()) {
        for (std::size_t i = 0; i < gin.size(); ++i) gin.data()[i] *= t.mask.data()[i];
    }
    return gin;
}

} // namespace detail

/// Mean softmax cross-entropy over the training nodes plus l2 * sum ||W||^2
/// (biases excluded), with gradients for every parameter. The APPR matrices
/// are constants.
inline LossAndGradients loss_and_gradients(const Model& model, const ForwardPass& fp, std::span<const Label> labels,
                                          std::span<const NodeId> train_nodes) {
    if (train_nodes.empty()) throw DomainError("loss_and_gradients: empty training set");
    LossAndGradients res;
    res.loss = cross_entropy(fp.logits, labels, train_nodes) + l2_penalty(model.params, model.spec.l2);

    DenseMatrix grad(fp.logits.rows(), fp.logits.cols());
    const double scale = 1.0 / static_cast<double>(train_nodes.size());
    for (NodeId i : train_nodes) {
        const auto p = fp.probabilities.row(i);
        auto g = grad.row(i);
        for (std::size_t j = 0; j < p.size(); ++j) g[j] += p[j] * scale;
        g[static_cast<std::size_t>(labels[i])] -= scale;
    }

    const bool through_propagation = fp.propagates_parameters && !model.params.pre.empty();
    res.gradients.post.resize(model.params.post.size());
    for (std::size_t l = model.params.post.size(); l-- > 0;) {
        grad = detail::dense_backward(model.params.post[l], fp.post[l], std::move(grad), model.spec.l2,
                                      res.gradients.post[l], l > 0 || through_propagation);
    }
    res.gradients.pre.resize(model.params.pre.size());
    if (!through_propagation) return res;
    grad = aggregate_scales_backward(fp.matrices, model.spec.aggregator, fp.aggregated, grad);
    for (std::size_t l = model.params.pre.size(); l-- > 0;) {
        grad = detail::dense_backward(model.params.pre[l], fp.pre[l], std::move(grad), model.spec.l2,
                                      res.gradients.pre[l], l > 0);
    }
    return res;
}

/// Predicted class per node; ties go to the lowest class index.
inline std::vector<Label> predict(const DenseMatrix& scores) {
    std::vector<Label> out(scores.rows());
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        const auto r = scores.row(i);
        out[i] = static_cast<Label>(std::max_element(r.begin(), r.end()) - r.begin());
    }
    return out;
}

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t t = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;

    friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam update. Throws NumericalError on a non-finite
/// gradient before touching any parameter.
inline void adam_step(Parameters& params, AdamState& state, Parameters& gradients, double lr) {
    auto p = params.tensors();
    auto g = gradients.tensors();
    if (p.size() != g.size()) throw DomainError("adam_step: gradient structure does not match parameters");
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (p[k].size() != g[k].size()) throw DomainError("adam_step: gradient shape does not match parameter");
        for (double x : g[k]) {
            if (!std::isfinite(x)) throw NumericalError("adam_step: non-finite gradient, training aborted");
        }
    }
    if (state.m.empty()) {
        for (auto t : p) {
            state.m.emplace_back(t.size(), 0.0);
            state.v.emplace_back(t.size(), 0.0);
        }
    }
    ++state.t;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t k = 0; k < p.size(); ++k) {
        auto& m = state.m[k];
        auto& v = state.v[k];
        for (std::size_t i = 0; i < p[k].size(); ++i) {
            const double gi = g[k][i];
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            p[k][i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

/// Early stopping on validation accuracy and loss.
///
/// The patience counter resets whenever accuracy exceeds the best accuracy
/// seen so far or loss falls below the best loss seen so far. The parameter
/// snapshot follows accuracy alone, with lower loss breaking ties. Training
/// stops once the counter reaches `patience` or `max_epochs` epochs have run;
/// the snapshot is then restored.
struct EarlyStopping {
    std::size_t patience = 100;
    std::size_t max_epochs = 10000;

    std::size_t epoch = 0;
    std::size_t counter = 0;
    double best_acc = -std::numeric_limits<double>::infinity();
    double best_loss = std::numeric_limits<double>::infinity();
    double snapshot_acc = -std::numeric_limits<double>::infinity();
    double snapshot_loss = std::numeric_limits<double>::infinity();
    std::size_t snapshot_epoch = 0;
    Parameters snapshot;
};

struct TrainState {
    Model model;
    AdamState adam;
    EarlyStopping stopping;
};

/// Records one epoch's validation metrics. Returns true when training should
/// stop, in which case the best snapshot has been restored into state.model.
inline bool early_stopping_update(TrainState& state, double val_acc, double val_loss) {
    auto& es = state.stopping;
    ++es.epoch;
    const bool improved = val_acc > es.best_acc || val_loss < es.best_loss;
    if (val_acc > es.snapshot_acc || (val_acc == es.snapshot_acc && val_loss < es.snapshot_loss)) {
        es.snapshot_acc = val_acc;
        es.snapshot_loss = val_loss;
        es.snapshot_epoch = es.epoch;
        es.snapshot = state.model.params;
    }
    es.best_acc = std::max(es.best_acc, val_acc);
    es.best_loss = std::min(es.best_loss, val_loss);
    es.counter = improved ? 0 : es.counter + 1;
    const bool stop = es.counter >= es.patience || es.epoch >= es.max_epochs;
    if (stop && es.snapshot_epoch > 0) state.model.params = es.snapshot;
    return stop;
}

} // namespace pushnet
