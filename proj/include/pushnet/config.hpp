#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pushnet/dataset.hpp"
#include "pushnet/error.hpp"
#include "pushnet/graph.hpp"
#include "pushnet/neural.hpp"
#include "pushnet/variant.hpp"

namespace pushnet {

/// Experiment configuration. Read from a flat "key = value" file; '#'
/// starts a comment. Unset model hyperparameters fall back to the tuned
/// per-variant defaults.
struct ExperimentConfig {
    std::string name = "dataset";
    std::string edges;
    std::string features;
    std::string labels;
    FeatureFormat feature_format = FeatureFormat::Triplets;

    NormalizationKind norm = NormalizationKind::SymmetricSelfLoops;
    std::vector<double> alphas{0.2, 0.1, 0.05};
    double epsilon = 1e-5;
    std::size_t max_pushes = 10'000'000;
    Aggregator aggregator = Aggregator::Sum;

    Variant variant = Variant::Full;
    std::optional<std::size_t> hidden;
    std::optional<double> learning_rate;
    std::optional<double> dropout;
    std::optional<double> l2;

    std::size_t splits = 20;
    std::size_t inits = 5;
    std::uint64_t split_seed = 0;
    std::uint64_t init_seed = 0;
    std::size_t train_per_class = 20;
    std::size_t val_count = 500;
    std::size_t max_epochs = 10000;
    std::size_t patience = 100;
    std::size_t workers = 1;
    std::string output_dir = "results";

    ModelSpec model_spec(std::size_t input_dim, std::size_t classes) const {
        ModelSpec s = default_spec(variant, input_dim, classes, alphas.size(), aggregator);
        if (hidden) s.hidden = *hidden;
        if (learning_rate) s.learning_rate = *learning_rate;
        if (dropout) s.dropout = *dropout;
        if (l2) s.l2 = *l2;
        return s;
    }
};

inline const std::set<std::string>& config_keys() {
    static const std::set<std::string> keys{
        "name",       "edges",      "features",        "labels",    "feature_format", "norm",
        "alphas",     "epsilon",    "max_pushes",      "aggregator", "variant",       "hidden",
        "learning_rate", "dropout", "l2",              "splits",    "inits",          "split_seed",
        "init_seed",  "train_per_class", "val_count",  "max_epochs", "patience",      "workers",
        "output_dir"};
    return keys;
}

namespace detail {

inline std::size_t parse_count(const std::string& key, std::string_view v, std::size_t line) {
    const auto x = parse_int(v, line);
    if (x < 0) throw ConfigError("config key '" + key + "' must be nonnegative");
    return static_cast<std::size_t>(x);
}

inline double parse_real(const std::string& key, std::string_view v, std::size_t line) {
    const double x = parse_double(v, line);
    if (!std::isfinite(x)) throw ConfigError("config key '" + key + "' must be finite");
    return x;
}

} // namespace detail

/// Applies one key/value pair; shared by the file parser and CLI overrides.
inline void set_config_value(ExperimentConfig& c, const std::string& key, std::string_view value, std::size_t line = 0) {
    if (!config_keys().count(key)) throw ConfigError("unknown config key '" + key + "'");
    const std::string v(value);
    if (key == "name") c.name = v;
    else if (key == "edges") c.edges = v;
    else if (key == "features") c.features = v;
    else if (key == "labels") c.labels = v;
    else if (key == "feature_format") {
        if (v == "triplets") c.feature_format = FeatureFormat::Triplets;
        else if (v == "csv") c.feature_format = FeatureFormat::Csv;
        else throw ConfigError("feature_format must be 'triplets' or 'csv'");
    } else if (key == "norm") {
        if (v == "sym") c.norm = NormalizationKind::SymmetricSelfLoops;
        else if (v == "rw") c.norm = NormalizationKind::RandomWalk;
        else throw ConfigError("norm must be 'sym' or 'rw'");
    } else if (key == "alphas") {
        c.alphas.clear();
        std::size_t start = 0;
        while (start <= value.size()) {
            const auto comma = value.find(',', start);
            const auto field = detail::trim(value.substr(start, comma == std::string_view::npos ? value.size() - start
                                                                                                : comma - start));
            c.alphas.push_back(detail::parse_real(key, field, line));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        for (double a : c.alphas) {
            if (!(a > 0.0 && a < 1.0)) throw ConfigError("alphas must lie in (0, 1)");
        }
    } else if (key == "epsilon") c.epsilon = detail::parse_real(key, value, line);
    else if (key == "max_pushes") c.max_pushes = detail::parse_count(key, value, line);
    else if (key == "aggregator") c.aggregator = parse_aggregator(v);
    else if (key == "variant") c.variant = parse_variant(v);
    else if (key == "hidden") c.hidden = detail::parse_count(key, value, line);
    else if (key == "learning_rate") c.learning_rate = detail::parse_real(key, value, line);
    else if (key == "dropout") c.dropout = detail::parse_real(key, value, line);
    else if (key == "l2") c.l2 = detail::parse_real(key, value, line);
    else if (key == "splits") c.splits = detail::parse_count(key, value, line);
    else if (key == "inits") c.inits = detail::parse_count(key, value, line);
    else if (key == "split_seed") c.split_seed = detail::parse_count(key, value, line);
    else if (key == "init_seed") c.init_seed = detail::parse_count(key, value, line);
    else if (key == "train_per_class") c.train_per_class = detail::parse_count(key, value, line);
    else if (key == "val_count") c.val_count = detail::parse_count(key, value, line);
    else if (key == "max_epochs") c.max_epochs = detail::parse_count(key, value, line);
    else if (key == "patience") c.patience = detail::parse_count(key, value, line);
    else if (key == "workers") c.workers = detail::parse_count(key, value, line);
    else if (key == "output_dir") c.output_dir = v;
}

/// Parses a config stream. Relative paths are resolved against base_dir.
inline ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
    ExperimentConfig c;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto body = detail::trim(line);
        if (const auto hash = body.find('#'); hash != std::string_view::npos) body = detail::trim(body.substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
        const std::string key(detail::trim(body.substr(0, eq)));
        const auto value = detail::trim(body.substr(eq + 1));
        if (value.empty()) throw ParseError(line_no, "empty value for '" + key + "'");
        set_config_value(c, key, value, line_no);
    }
    if (!base_dir.empty()) {
        for (auto* p : {&c.edges, &c.features, &c.labels, &c.output_dir}) {
            if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base_dir / *p).lexically_normal().string();
        }
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    auto in = detail::open_input(path);
    return parse_config(in, std::filesystem::path(path).parent_path());
}

/// Checks everything that can be checked without loading data.
inline void validate(const ExperimentConfig& c) {
    if (c.edges.empty() || c.features.empty() || c.labels.empty()) {
        throw ConfigError("config must set edges, features and labels");
    }
    for (const auto* p : {&c.edges, &c.features, &c.labels}) {
        if (!std::filesystem::exists(*p)) throw IoError("dataset file '" + *p + "' does not exist");
    }
    if (c.alphas.empty()) throw ConfigError("at least one alpha is required");
    for (std::size_t k = 1; k < c.alphas.size(); ++k) {
        if (c.alphas[k] > c.alphas[k - 1]) throw ConfigError("alphas must be listed in nonincreasing order");
    }
    if (!(c.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (c.max_pushes == 0) throw ConfigError("max_pushes must be positive");
    if (c.splits == 0 || c.inits == 0) throw ConfigError("splits and inits must be positive");
    if (c.max_epochs == 0 || c.patience == 0) throw ConfigError("max_epochs and patience must be positive");
    if (c.val_count == 0) throw ConfigError("val_count must be positive");
    if (c.variant == Variant::TPP && c.aggregator == Aggregator::Cat) {
        throw ConfigError("cat aggregation is not applicable to the tpp variant");
    }
    ModelSpec probe = c.model_spec(1, 1);
    validate(probe);
}

} // namespace pushnet
