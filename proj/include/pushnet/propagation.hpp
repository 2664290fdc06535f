#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "pushnet/appr.hpp"
#include "pushnet/dense_matrix.hpp"
#include "pushnet/error.hpp"
#include "pushnet/parallel.hpp"
#include "pushnet/sparse_matrix.hpp"
#include "pushnet/variant.hpp"

namespace pushnet {

/// H' = P H. Rows are independent, so the result is identical for any
/// worker count.
inline DenseMatrix propagate(const SparseMatrix& p, const DenseMatrix& h, std::size_t workers = 1) {
    if (p.cols() != h.rows()) throw DomainError("propagate: P has " + std::to_string(p.cols()) +
                                                " columns but H has " + std::to_string(h.rows()) + " rows");
    DenseMatrix out(p.rows(), h.cols());
    const std::size_t w = h.cols();
    parallel_for_ranges(p.rows(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            double* dst = out.row(i).data();
            const auto idx = p.row_indices(i);
            const auto val = p.row_values(i);
            for (std::size_t e = 0; e < idx.size(); ++e) {
                const double* src = h.row(idx[e]).data();
                const double v = val[e];
                for (std::size_t f = 0; f < w; ++f) dst[f] += v * src[f];
            }
        }
    });
    return out;
}

/// G' = P^T G, used to send gradients back through a propagation step.
inline DenseMatrix propagate_transposed(const SparseMatrix& p, const DenseMatrix& g) {
    if (p.rows() != g.rows()) throw DomainError("propagate_transposed: shape mismatch");
    DenseMatrix out(p.cols(), g.cols());
    const std::size_t w = g.cols();
    for (std::size_t i = 0; i < p.rows(); ++i) {
        const double* src = g.row(i).data();
        const auto idx = p.row_indices(i);
        const auto val = p.row_values(i);
        for (std::size_t e = 0; e < idx.size(); ++e) {
            double* dst = out.row(idx[e]).data();
            const double v = val[e];
            for (std::size_t f = 0; f < w; ++f) dst[f] += v * src[f];
        }
    }
    return out;
}

namespace detail {

struct Fnv1a {
    std::uint64_t h = 1469598103934665603ULL;
    void bytes(const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 1099511628211ULL;
        }
    }
    template <typename T>
    void value(const T& v) {
        bytes(&v, sizeof v);
    }
    template <typename T>
    void range(const std::vector<T>& v) {
        value(v.size());
        if (!v.empty()) bytes(v.data(), v.size() * sizeof(T));
    }
};

} // namespace detail

inline std::uint64_t fingerprint(const DenseMatrix& x) {
    detail::Fnv1a f;
    f.value(x.rows());
    f.value(x.cols());
    f.range(x.data());
    return f.h;
}

/// Precomputed APPR matrices for alpha_1 >= ... >= alpha_K plus the scale
/// aggregator. For Sum aggregation the summed matrix is formed once.
class ScaleSet {
public:
    ScaleSet(std::vector<ApprMatrix> scales, Aggregator aggregator)
        : scales_(std::move(scales)), aggregator_(aggregator) {
        if (scales_.empty()) throw ConfigError("scale set: at least one scale is required");
        for (std::size_t k = 0; k < scales_.size(); ++k) {
            const auto& m = scales_[k].matrix;
            if (m.rows() != m.cols() || m.rows() != scales_.front().matrix.rows()) {
                throw DomainError("scale set: all APPR matrices must be square with the same shape");
            }
            if (k > 0 && scales_[k].alpha > scales_[k - 1].alpha) {
                throw ConfigError("scale set: alphas must be ordered nonincreasing");
            }
        }
        if (aggregator_ == Aggregator::Sum) summed_ = sum_scales(scales_);
        detail::Fnv1a f;
        f.value(static_cast<int>(aggregator_));
        for (const auto& s : scales_) {
            f.value(s.alpha);
            f.value(s.epsilon);
            f.value(s.matrix.rows());
            f.range(s.matrix.row_offsets());
            f.range(s.matrix.col_indices());
            f.range(s.matrix.values());
        }
        fingerprint_ = f.h;
    }

    std::size_t size() const noexcept { return scales_.size(); }
    std::size_t num_nodes() const noexcept { return scales_.front().matrix.rows(); }
    Aggregator aggregator() const noexcept { return aggregator_; }
    const std::vector<ApprMatrix>& scales() const noexcept { return scales_; }
    const SparseMatrix& matrix(std::size_t k) const noexcept { return scales_[k].matrix; }
    // Only meaningful for Sum aggregation.
    const SparseMatrix& summed() const noexcept { return summed_; }
    std::uint64_t fingerprint() const noexcept { return fingerprint_; }

    /// Width of the aggregated representation for inputs of the given width.
    std::size_t output_width(std::size_t input_width) const noexcept {
        return aggregator_ == Aggregator::Cat ? input_width * scales_.size() : input_width;
    }

    /// The matrices actually propagated over: the single summed matrix for
    /// Sum, one per scale otherwise.
    std::vector<SparseMatrix> propagation_matrices() const {
        if (aggregator_ == Aggregator::Sum) return {summed_};
        std::vector<SparseMatrix> out;
        out.reserve(scales_.size());
        for (const auto& s : scales_) out.push_back(s.matrix);
        return out;
    }

private:
    std::vector<ApprMatrix> scales_;
    Aggregator aggregator_;
    SparseMatrix summed_;
    std::uint64_t fingerprint_ = 0;
};

struct Aggregated {
    DenseMatrix values;
    // For Max: index of the winning scale per entry (row-major, same shape
    // as values). Empty for Sum and Cat.
    std::vector<std::uint32_t> argmax;
};

/// Aggregates P_k H over the given matrices. With Sum and a single matrix this
/// is one propagation; that is how the summed matrix is used.
inline Aggregated aggregate_scales(std::span<const SparseMatrix> mats, Aggregator agg, const DenseMatrix& h0,
                                   std::size_t workers = 1) {
    if (mats.empty()) throw DomainError("aggregate_scales: no matrices");
    Aggregated out;
    switch (agg) {
        case Aggregator::Sum: {
            out.values = propagate(mats[0], h0, workers);
            for (std::size_t k = 1; k < mats.size(); ++k) {
                const auto next = propagate(mats[k], h0, workers);
                for (std::size_t i = 0; i < next.size(); ++i) out.values.data()[i] += next.data()[i];
            }
            break;
        }
        case Aggregator::Max: {
            out.values = propagate(mats[0], h0, workers);
            out.argmax.assign(out.values.size(), 0);
            for (std::size_t k = 1; k < mats.size(); ++k) {
                const auto next = propagate(mats[k], h0, workers);
                // Strict comparison: ties stay with the earlier, larger-alpha scale.
                for (std::size_t i = 0; i < next.size(); ++i) {
                    if (next.data()[i] > out.values.data()[i]) {
                        out.values.data()[i] = next.data()[i];
                        out.argmax[i] = static_cast<std::uint32_t>(k);
                    }
                }
            }
            break;
        }
        case Aggregator::Cat: {
            std::vector<DenseMatrix> parts;
            parts.reserve(mats.size());
            for (const auto& m : mats) parts.push_back(propagate(m, h0, workers));
            out.values = hconcat(parts);
            break;
        }
    }
    return out;
}

/// Gradient with respect to H given the gradient of the aggregated output.
inline DenseMatrix aggregate_scales_backward(std::span<const SparseMatrix> mats, Aggregator agg,
                                             const Aggregated& forward, const DenseMatrix& grad_out) {
    const std::size_t n = mats[0].cols();
    switch (agg) {
        case Aggregator::Sum: {
            DenseMatrix g = propagate_transposed(mats[0], grad_out);
            for (std::size_t k = 1; k < mats.size(); ++k) {
                const auto next = propagate_transposed(mats[k], grad_out);
                for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += next.data()[i];
            }
            return g;
        }
        case Aggregator::Max: {
            DenseMatrix g(n, grad_out.cols());
            for (std::size_t k = 0; k < mats.size(); ++k) {
                DenseMatrix routed(grad_out.rows(), grad_out.cols());
                bool any = false;
                for (std::size_t i = 0; i < routed.size(); ++i) {
                    if (forward.argmax[i] == k) {
                        routed.data()[i] = grad_out.data()[i];
                        any = true;
                    }
                }
                if (!any) continue;
                const auto part = propagate_transposed(mats[k], routed);
                for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += part.data()[i];
            }
            return g;
        }
        case Aggregator::Cat: {
            const std::size_t w = grad_out.cols() / mats.size();
            DenseMatrix g(n, w);
            for (std::size_t k = 0; k < mats.size(); ++k) {
                DenseMatrix slice(grad_out.rows(), w);
                for (std::size_t i = 0; i < grad_out.rows(); ++i) {
                    const auto src = grad_out.row(i).subspan(k * w, w);
                    std::copy(src.begin(), src.end(), slice.row(i).begin());
                }
                const auto part = propagate_transposed(mats[k], slice);
                for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += part.data()[i];
            }
            return g;
        }
    }
    return {};
}

/// Multi-scale aggregation SAGG(P H). Sum is computed with the summed matrix.
inline Aggregated scale_aggregate(const ScaleSet& s, const DenseMatrix& h0, std::size_t workers = 1) {
    if (h0.rows() != s.num_nodes()) throw DomainError("scale_aggregate: feature rows must equal node count");
    if (s.aggregator() == Aggregator::Sum) {
        return aggregate_scales(std::span<const SparseMatrix>(&s.summed(), 1), Aggregator::Sum, h0, workers);
    }
    std::vector<SparseMatrix> mats = s.propagation_matrices();
    return aggregate_scales(mats, s.aggregator(), h0, workers);
}

/// Stores SAGG(P X) for models that push raw features, keyed by the scale set
/// and feature fingerprints.
class PropagationCache {
public:
    const DenseMatrix& get(const ScaleSet& s, const DenseMatrix& x, Variant variant, std::size_t workers = 1) {
        if (!pushes_raw_features(variant)) {
            throw ConfigError("propagation cache: variant '" + std::string(to_string(variant)) +
                              "' transforms features before pushing and cannot be cached");
        }
        const std::uint64_t xs = fingerprint(x);
        if (entry_ && entry_->scales == s.fingerprint() && entry_->features == xs) return entry_->value;
        ++propagations_;
        entry_ = Entry{s.fingerprint(), xs, scale_aggregate(s, x, workers).values};
        return entry_->value;
    }

    /// Number of propagations performed so far (cache misses).
    std::size_t propagations() const noexcept { return propagations_; }
    void clear() { entry_.reset(); }

private:
    struct Entry {
        std::uint64_t scales;
        std::uint64_t features;
        DenseMatrix value;
    };
    std::optional<Entry> entry_;
    std::size_t propagations_ = 0;
};

} // namespace pushnet
