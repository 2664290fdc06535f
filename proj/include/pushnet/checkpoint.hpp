#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pushnet/error.hpp"
#include "pushnet/neural.hpp"

namespace pushnet {

/// Trained model plus the settings needed to rebuild its inputs.
struct Checkpoint {
    Model model;
    std::vector<double> alphas;
    double epsilon = 0.0;
    std::uint64_t split_seed = 0;
    std::uint64_t init_seed = 0;

    friend bool operator==(const Checkpoint& a, const Checkpoint& b) {
        return a.model.spec == b.model.spec && a.model.params == b.model.params && a.alphas == b.alphas &&
               a.epsilon == b.epsilon && a.split_seed == b.split_seed && a.init_seed == b.init_seed;
    }
};

namespace detail {

inline nlohmann::json layers_to_json(const std::vector<DenseLayer>& layers) {
    auto arr = nlohmann::json::array();
    for (const auto& l : layers) {
        arr.push_back({{"in", l.weight.rows()}, {"out", l.weight.cols()}, {"weight", l.weight.data()}, {"bias", l.bias}});
    }
    return arr;
}

inline std::vector<DenseLayer> layers_from_json(const nlohmann::json& arr) {
    std::vector<DenseLayer> out;
    for (const auto& j : arr) {
        DenseLayer l;
        const auto in = j.at("in").get<std::size_t>();
        const auto o = j.at("out").get<std::size_t>();
        l.weight = DenseMatrix(in, o, j.at("weight").get<std::vector<double>>());
        l.bias = j.at("bias").get<std::vector<double>>();
        if (l.bias.size() != o) throw ParseError(0, "checkpoint: bias length does not match layer width");
        out.push_back(std::move(l));
    }
    return out;
}

} // namespace detail

inline void save_checkpoint(std::ostream& out, const Checkpoint& c) {
    const auto& s = c.model.spec;
    nlohmann::json j;
    j["format"] = "pushnet-checkpoint";
    j["version"] = 1;
    j["spec"] = {{"variant", std::string(to_string(s.variant))},
                 {"input_dim", s.input_dim},
                 {"hidden", s.hidden},
                 {"classes", s.classes},
                 {"aggregator", std::string(to_string(s.aggregator))},
                 {"num_scales", s.num_scales},
                 {"dropout", s.dropout},
                 {"l2", s.l2},
                 {"learning_rate", s.learning_rate},
                 {"identity_transforms", s.identity_transforms}};
    j["alphas"] = c.alphas;
    j["epsilon"] = c.epsilon;
    j["split_seed"] = c.split_seed;
    j["init_seed"] = c.init_seed;
    j["pre"] = detail::layers_to_json(c.model.params.pre);
    j["post"] = detail::layers_to_json(c.model.params.post);
    out << j.dump() << '\n';
}

inline Checkpoint load_checkpoint(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(0, std::string("checkpoint: ") + e.what());
    }
    try {
        if (j.at("format") != "pushnet-checkpoint") throw ParseError(0, "checkpoint: unknown format");
        if (j.at("version") != 1) throw ParseError(0, "checkpoint: unsupported version");
        Checkpoint c;
        const auto& s = j.at("spec");
        auto& spec = c.model.spec;
        spec.variant = parse_variant(s.at("variant").get<std::string>());
        spec.input_dim = s.at("input_dim").get<std::size_t>();
        spec.hidden = s.at("hidden").get<std::size_t>();
        spec.classes = s.at("classes").get<std::size_t>();
        spec.aggregator = parse_aggregator(s.at("aggregator").get<std::string>());
        spec.num_scales = s.at("num_scales").get<std::size_t>();
        spec.dropout = s.at("dropout").get<double>();
        spec.l2 = s.at("l2").get<double>();
        spec.learning_rate = s.at("learning_rate").get<double>();
        spec.identity_transforms = s.at("identity_transforms").get<bool>();
        c.alphas = j.at("alphas").get<std::vector<double>>();
        c.epsilon = j.at("epsilon").get<double>();
        c.split_seed = j.at("split_seed").get<std::uint64_t>();
        c.init_seed = j.at("init_seed").get<std::uint64_t>();
        c.model.params.pre = detail::layers_from_json(j.at("pre"));
        c.model.params.post = detail::layers_from_json(j.at("post"));
        validate(spec);
        const auto arch = architecture(spec);
        const auto check = [](const std::vector<LayerShape>& shapes, const std::vector<DenseLayer>& layers) {
            if (shapes.size() != layers.size()) throw ParseError(0, "checkpoint: layer count does not match spec");
            for (std::size_t i = 0; i < shapes.size(); ++i) {
                if (layers[i].weight.rows() != shapes[i].in || layers[i].weight.cols() != shapes[i].out) {
                    throw ParseError(0, "checkpoint: layer shape does not match spec");
                }
            }
        };
        check(arch.pre, c.model.params.pre);
        check(arch.post, c.model.params.post);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(0, std::string("checkpoint: ") + e.what());
    }
}

} // namespace pushnet
