#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pushnet/dataset.hpp"
#include "pushnet/error.hpp"

namespace pushnet {

struct SplitSpec {
    std::size_t train_per_class = 20;
    std::size_t val_count = 500;
    std::uint64_t seed = 0;
};

struct Split {
    std::vector<NodeId> train;
    std::vector<NodeId> val;
    std::vector<NodeId> test;

    friend bool operator==(const Split&, const Split&) = default;
};

/// Samples train_per_class nodes of every class, then val_count of the
/// remaining labeled nodes; everything else labeled is test. Sampling is
/// uniform without replacement and fully determined by the seed. Each list
/// is returned sorted.
inline Split sample_split(std::span<const Label> labels, std::size_t num_classes, const SplitSpec& spec) {
    std::vector<std::vector<NodeId>> by_class(num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == kUnlabeled) continue;
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
            throw DomainError("sample_split: label out of range at node " + std::to_string(i));
        }
        by_class[static_cast<std::size_t>(labels[i])].push_back(static_cast<NodeId>(i));
    }
    for (std::size_t c = 0; c < num_classes; ++c) {
        if (by_class[c].size() < spec.train_per_class) {
            throw ConfigError("sample_split: class " + std::to_string(c) + " has " + std::to_string(by_class[c].size()) +
                              " nodes, fewer than the " + std::to_string(spec.train_per_class) + " training nodes required");
        }
    }
    std::mt19937_64 rng(spec.seed);
    Split s;
    std::vector<NodeId> rest;
    for (auto& nodes : by_class) {
        std::shuffle(nodes.begin(), nodes.end(), rng);
        s.train.insert(s.train.end(), nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(spec.train_per_class));
        rest.insert(rest.end(), nodes.begin() + static_cast<std::ptrdiff_t>(spec.train_per_class), nodes.end());
    }
    if (rest.size() <= spec.val_count) {
        throw ConfigError("sample_split: " + std::to_string(rest.size()) + " labeled nodes remain after training " +
                          "selection, not enough for " + std::to_string(spec.val_count) + " validation nodes and a test set");
    }
    std::sort(rest.begin(), rest.end());
    std::shuffle(rest.begin(), rest.end(), rng);
    s.val.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(spec.val_count));
    s.test.assign(rest.begin() + static_cast<std::ptrdiff_t>(spec.val_count), rest.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.val.begin(), s.val.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

} // namespace pushnet
