#pragma once

#include <string>
#include <string_view>

#include "pushnet/error.hpp"

namespace pushnet {

// Model family members, named by their operation sequence.
enum class Variant {
    Full,  // transform - push - predict
    PTP,   // push - transform - predict
    PP,    // push - predict
    TPP,   // transform - predict - push
};

enum class Aggregator { Sum, Max, Cat };

/// f = id: propagated inputs do not depend on parameters and can be cached.
constexpr bool pushes_raw_features(Variant v) noexcept { return v == Variant::PTP || v == Variant::PP; }

inline std::string_view to_string(Variant v) noexcept {
    switch (v) {
        case Variant::Full: return "full";
        case Variant::PTP: return "ptp";
        case Variant::PP: return "pp";
        case Variant::TPP: return "tpp";
    }
    return "?";
}

inline std::string_view to_string(Aggregator a) noexcept {
    switch (a) {
        case Aggregator::Sum: return "sum";
        case Aggregator::Max: return "max";
        case Aggregator::Cat: return "cat";
    }
    return "?";
}

inline Variant parse_variant(std::string_view s) {
    if (s == "full" || s == "pushnet") return Variant::Full;
    if (s == "ptp") return Variant::PTP;
    if (s == "pp") return Variant::PP;
    if (s == "tpp") return Variant::TPP;
    throw ConfigError("unknown variant '" + std::string(s) + "' (expected full, ptp, pp or tpp)");
}

inline Aggregator parse_aggregator(std::string_view s) {
    if (s == "sum") return Aggregator::Sum;
    if (s == "max") return Aggregator::Max;
    if (s == "cat") return Aggregator::Cat;
    throw ConfigError("unknown aggregator '" + std::string(s) + "' (expected sum, max or cat)");
}

} // namespace pushnet
