#pragma once

#include <cmath>
#include <filesystem>
#include <limits>
#include <string>

#include <json.hpp>

#include "relubound/error.hpp"
#include "relubound/io.hpp"
#include "relubound/network.hpp"

namespace relubound {

namespace detail {

// JSON has no literal for NaN or infinity; writers that emit them as strings are
// accepted here so that validation can report them as non-finite.
inline double json_number(const nlohmann::json& v, const std::string& what) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const auto& s = v.get_ref<const std::string&>();
        if (s == "NaN" || s == "nan") return std::numeric_limits<double>::quiet_NaN();
        if (s == "Infinity" || s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-Infinity" || s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    throw InputError(what + ": expected a number");
}

inline std::vector<double> json_vector(const nlohmann::json& v, const std::string& what) {
    if (!v.is_array()) throw InputError(what + ": expected an array");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& e : v) out.push_back(json_number(e, what));
    return out;
}

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw InputError(where + ": missing key '" + key + "'");
    return *it;
}

} // namespace detail

inline nlohmann::json to_json(const Network& net) {
    nlohmann::json j;
    j["name"] = net.name;
    j["input_dim"] = net.input_dim;
    j["input_lb"] = net.input_lb;
    j["input_ub"] = net.input_ub;
    j["layers"] = nlohmann::json::array();
    for (const Layer& layer : net.layers) {
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t r = 0; r < layer.width(); ++r) {
            auto row = layer.weights.row(r);
            rows.push_back(std::vector<double>(row.begin(), row.end()));
        }
        j["layers"].push_back({{"weights", std::move(rows)}, {"bias", layer.bias}, {"activation", to_string(layer.activation)}});
    }
    return j;
}

inline Network network_from_json(const nlohmann::json& j) {
    const std::string where = "network";
    if (!j.is_object()) throw InputError(where + ": top level must be an object");
    Network net;
    const auto& name = detail::require(j, "name", where);
    if (!name.is_string()) throw InputError(where + ": 'name' must be a string");
    net.name = name.get<std::string>();
    const auto& dim = detail::require(j, "input_dim", where);
    if (!dim.is_number_integer() || dim.get<long long>() <= 0)
        throw InputError(where + ": 'input_dim' must be a positive integer");
    net.input_dim = dim.get<std::size_t>();
    net.input_lb = detail::json_vector(detail::require(j, "input_lb", where), "input_lb");
    net.input_ub = detail::json_vector(detail::require(j, "input_ub", where), "input_ub");

    const auto& layers = detail::require(j, "layers", where);
    if (!layers.is_array()) throw InputError(where + ": 'layers' must be an array");
    std::size_t index = 0;
    for (const auto& lj : layers) {
        ++index;
        const std::string lw = "layer " + std::to_string(index);
        Layer layer;
        const auto& rows = detail::require(lj, "weights", lw);
        if (!rows.is_array() || rows.empty()) throw InputError(lw + ": 'weights' must be a non-empty array of rows");
        std::size_t cols = 0;
        std::vector<std::vector<double>> parsed;
        for (const auto& row : rows) {
            parsed.push_back(detail::json_vector(row, lw + " weights"));
            if (parsed.size() == 1) cols = parsed.front().size();
            else if (parsed.back().size() != cols) throw InputError(lw + ": ragged weight matrix");
        }
        layer.weights = Matrix(parsed.size(), cols);
        for (std::size_t r = 0; r < parsed.size(); ++r)
            for (std::size_t c = 0; c < cols; ++c) layer.weights(r, c) = parsed[r][c];
        layer.bias = detail::json_vector(detail::require(lj, "bias", lw), lw + " bias");
        const auto& act = detail::require(lj, "activation", lw);
        if (act == "relu") layer.activation = Activation::relu;
        else if (act == "linear") layer.activation = Activation::linear;
        else throw InputError(lw + ": activation must be \"relu\" or \"linear\"");
        net.layers.push_back(std::move(layer));
    }
    net.validate();
    return net;
}

inline Network parse_network(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(std::string("network: JSON parse failure: ") + e.what());
    }
    return network_from_json(j);
}

inline Network load_network(const std::filesystem::path& path) {
    try {
        return parse_network(read_text_file(path));
    } catch (const InputError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

/// nlohmann's serializer prints the shortest decimal that parses back to the same double.
inline std::string dump_network(const Network& net) { return to_json(net).dump(1) + "\n"; }

inline void save_network(const Network& net, const std::filesystem::path& path) {
    write_text_file(path, dump_network(net));
}

} // namespace relubound
