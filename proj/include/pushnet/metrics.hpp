#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "pushnet/dataset.hpp"
#include "pushnet/error.hpp"

namespace pushnet {

struct Scores {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
};

/// Accuracy and macro-F1 over the nodes in mask. Every class in
/// 0..num_classes-1 enters the macro mean; a class with no true positives
/// contributes 0.
inline Scores evaluate(std::span<const Label> predictions, std::span<const Label> labels,
                       std::span<const NodeId> mask, std::size_t num_classes) {
    if (mask.empty()) throw DomainError("evaluate: empty mask");
    std::vector<std::size_t> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
    std::size_t correct = 0;
    for (NodeId i : mask) {
        const Label p = predictions[i];
        const Label y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= num_classes || p < 0 || static_cast<std::size_t>(p) >= num_classes) {
            throw DomainError("evaluate: label outside 0..c-1");
        }
        if (p == y) {
            ++correct;
            ++tp[static_cast<std::size_t>(y)];
        } else {
            ++fp[static_cast<std::size_t>(p)];
            ++fn[static_cast<std::size_t>(y)];
        }
    }
    Scores s;
    s.accuracy = static_cast<double>(correct) / static_cast<double>(mask.size());
    double f1_sum = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        const double denom = static_cast<double>(2 * tp[c] + fp[c] + fn[c]);
        if (tp[c] > 0) f1_sum += 2.0 * static_cast<double>(tp[c]) / denom;
    }
    s.macro_f1 = num_classes == 0 ? 0.0 : f1_sum / static_cast<double>(num_classes);
    return s;
}

struct Summary {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation (denominator n - 1); 0 for n < 2
};

inline Summary summarize(std::span<const double> xs) {
    Summary s;
    if (xs.empty()) return s;
    s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    if (xs.size() < 2) return s;
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    return s;
}

} // namespace pushnet
