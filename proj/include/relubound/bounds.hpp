#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "relubound/error.hpp"
#include "relubound/format.hpp"
#include "relubound/io.hpp"
#include "relubound/network.hpp"

namespace relubound {

enum class BoundMethod { naive_norm, naive_interval, weak, strong, hybrid };

/// How a single bound value was obtained. Ordered from most to least exact, so the
/// status of a neuron is the larger of its two directions.
enum class BoundStatus { closed_form, lp_optimal, milp_optimal, dual_bound, fallback };

enum class Sense { maximize, minimize };

inline const char* to_string(BoundMethod m) {
    switch (m) {
    case BoundMethod::naive_norm: return "naive_norm";
    case BoundMethod::naive_interval: return "naive_interval";
    case BoundMethod::weak: return "weak";
    case BoundMethod::strong: return "strong";
    case BoundMethod::hybrid: return "hybrid";
    }
    return "?";
}

inline const char* to_string(BoundStatus s) {
    switch (s) {
    case BoundStatus::closed_form: return "closed_form";
    case BoundStatus::lp_optimal: return "lp_optimal";
    case BoundStatus::milp_optimal: return "milp_optimal";
    case BoundStatus::dual_bound: return "dual_bound";
    case BoundStatus::fallback: return "fallback";
    }
    return "?";
}

inline const char* to_string(Sense s) { return s == Sense::maximize ? "max" : "min"; }

/// Accepts both the canonical names and the short CLI spellings (naive, interval).
inline BoundMethod parse_bound_method(std::string_view s) {
    if (s == "naive_norm" || s == "naive") return BoundMethod::naive_norm;
    if (s == "naive_interval" || s == "interval") return BoundMethod::naive_interval;
    if (s == "weak") return BoundMethod::weak;
    if (s == "strong") return BoundMethod::strong;
    if (s == "hybrid") return BoundMethod::hybrid;
    throw InputError("unknown bound method '" + std::string(s) + "'");
}

inline BoundStatus parse_bound_status(std::string_view s) {
    for (auto st : {BoundStatus::closed_form, BoundStatus::lp_optimal, BoundStatus::milp_optimal,
                    BoundStatus::dual_bound, BoundStatus::fallback})
        if (s == to_string(st)) return st;
    throw InputError("unknown bound status '" + std::string(s) + "'");
}

/// Bounds of one layer's pre-activations, with provenance per direction.
struct LayerBounds {
    std::vector<double> lb;
    std::vector<double> ub;
    std::vector<BoundStatus> lb_status;
    std::vector<BoundStatus> ub_status;
    std::vector<double> lb_time;
    std::vector<double> ub_time;

    LayerBounds() = default;
    explicit LayerBounds(std::size_t width, BoundStatus status = BoundStatus::closed_form)
        : lb(width, 0.0), ub(width, 0.0), lb_status(width, status), ub_status(width, status),
          lb_time(width, 0.0), ub_time(width, 0.0) {}

    std::size_t width() const noexcept { return lb.size(); }

    BoundStatus status(std::size_t j) const { return std::max(lb_status[j], ub_status[j]); }
    double solve_time(std::size_t j) const { return lb_time[j] + ub_time[j]; }
};

/// Pre-activation bounds for layers 1..L. `layers[l - 1]` holds layer l.
struct BoundsSet {
    BoundMethod method = BoundMethod::naive_norm;
    std::string network_name;
    std::vector<LayerBounds> layers;
    double total_time = 0.0;

    std::size_t depth() const noexcept { return layers.size(); }
    const LayerBounds& layer(std::size_t l) const { return layers.at(l - 1); }
    LayerBounds& layer(std::size_t l) { return layers.at(l - 1); }

    /// Throws unless the bounds cover layers 1..upto of `net` with matching widths.
    void check_covers(const Network& net, std::size_t upto) const {
        if (upto > net.depth()) throw InputError("bounds: requested layer beyond network depth");
        if (layers.size() < upto)
            throw InputError("bounds: missing bounds for layer " + std::to_string(layers.size() + 1));
        for (std::size_t l = 1; l <= upto; ++l) {
            const LayerBounds& lb = layer(l);
            if (lb.width() != net.width(l) || lb.ub.size() != net.width(l))
                throw InputError("bounds: layer " + std::to_string(l) + " width does not match network");
        }
    }

    /// Full shape and value validation against a network.
    void validate(const Network& net) const {
        if (layers.size() != net.depth()) throw InputError("bounds: layer count does not match network");
        check_covers(net, net.depth());
        for (std::size_t l = 1; l <= depth(); ++l) {
            const LayerBounds& b = layer(l);
            for (std::size_t j = 0; j < b.width(); ++j) {
                if (!std::isfinite(b.lb[j]) || !std::isfinite(b.ub[j]))
                    throw InputError("bounds: non-finite bound at layer " + std::to_string(l));
                if (b.lb[j] > b.ub[j])
                    throw InputError("bounds: lb > ub at layer " + std::to_string(l) + ", neuron " + std::to_string(j));
            }
        }
    }

    bool same_values(const BoundsSet& other) const {
        if (layers.size() != other.layers.size()) return false;
        for (std::size_t l = 0; l < layers.size(); ++l)
            if (layers[l].lb != other.layers[l].lb || layers[l].ub != other.layers[l].ub) return false;
        return true;
    }
};

/// Serialization options. Timing fields are the only nondeterministic content of a
/// BoundsSet file; `omit_timing` writes them as zero.
struct BoundsWriteOptions {
    bool omit_timing = false;
};

inline nlohmann::json to_json(const BoundsSet& b, BoundsWriteOptions opt = {}) {
    nlohmann::json j;
    j["method"] = to_string(b.method);
    j["network_name"] = b.network_name;
    j["total_time"] = opt.omit_timing ? 0.0 : b.total_time;
    j["layers"] = nlohmann::json::array();
    for (const LayerBounds& lb : b.layers) {
        nlohmann::json status = nlohmann::json::array();
        std::vector<double> times(lb.width(), 0.0);
        for (std::size_t i = 0; i < lb.width(); ++i) {
            status.push_back(to_string(lb.status(i)));
            if (!opt.omit_timing) times[i] = lb.solve_time(i);
        }
        j["layers"].push_back({{"lb", lb.lb}, {"ub", lb.ub}, {"status", std::move(status)}, {"solve_time", times}});
    }
    return j;
}

inline BoundsSet bounds_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InputError("bounds: top level must be an object");
    auto get = [&](const char* key) -> const nlohmann::json& {
        auto it = j.find(key);
        if (it == j.end()) throw InputError(std::string("bounds: missing key '") + key + "'");
        return *it;
    };
    BoundsSet b;
    b.method = parse_bound_method(get("method").get<std::string>());
    b.network_name = get("network_name").get<std::string>();
    b.total_time = get("total_time").get<double>();
    const auto& layers = get("layers");
    if (!layers.is_array()) throw InputError("bounds: 'layers' must be an array");
    for (const auto& lj : layers) {
        LayerBounds lb;
        try {
            lb.lb = lj.at("lb").get<std::vector<double>>();
            lb.ub = lj.at("ub").get<std::vector<double>>();
            auto status = lj.at("status").get<std::vector<std::string>>();
            auto times = lj.at("solve_time").get<std::vector<double>>();
            if (lb.ub.size() != lb.lb.size() || status.size() != lb.lb.size() || times.size() != lb.lb.size())
                throw InputError("bounds: per-layer arrays differ in length");
            for (const auto& s : status) {
                lb.lb_status.push_back(parse_bound_status(s));
                lb.ub_status.push_back(lb.lb_status.back());
            }
            lb.lb_time = times;
            lb.ub_time.assign(times.size(), 0.0);
        } catch (const nlohmann::json::exception& e) {
            throw InputError(std::string("bounds: malformed layer entry: ") + e.what());
        }
        b.layers.push_back(std::move(lb));
    }
    return b;
}

inline std::string dump_bounds(const BoundsSet& b, BoundsWriteOptions opt = {}) { return to_json(b, opt).dump(1) + "\n"; }

inline void save_bounds(const BoundsSet& b, const std::filesystem::path& path, BoundsWriteOptions opt = {}) {
    write_text_file(path, dump_bounds(b, opt));
}

inline BoundsSet load_bounds(const std::filesystem::path& path) {
    try {
        return bounds_from_json(nlohmann::json::parse(read_text_file(path)));
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

/// Per-neuron CSV: one row per (layer, neuron, sense).
inline std::string bounds_csv(const BoundsSet& b, BoundsWriteOptions opt = {}) {
    std::ostringstream out;
    out << "network,method,layer,neuron,sense,value,status,solve_time_s\n";
    for (std::size_t l = 1; l <= b.depth(); ++l) {
        const LayerBounds& lb = b.layer(l);
        for (std::size_t j = 0; j < lb.width(); ++j) {
            out << b.network_name << ',' << to_string(b.method) << ',' << l << ',' << j << ",lower,"
                << format_double(lb.lb[j]) << ',' << to_string(lb.lb_status[j]) << ','
                << format_double(opt.omit_timing ? 0.0 : lb.lb_time[j]) << '\n';
            out << b.network_name << ',' << to_string(b.method) << ',' << l << ',' << j << ",upper,"
                << format_double(lb.ub[j]) << ',' << to_string(lb.ub_status[j]) << ','
                << format_double(opt.omit_timing ? 0.0 : lb.ub_time[j]) << '\n';
        }
    }
    return out.str();
}

} // namespace relubound
