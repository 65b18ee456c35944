#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "relubound/network.hpp"
#include "relubound/network_io.hpp"

namespace testsupport {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(FIXTURE_DIR) / name; }

inline relubound::Network gap_net() { return relubound::load_network(fixture("gap_net.json")); }
inline relubound::Network identity_logit() { return relubound::load_network(fixture("identity_logit.json")); }

/// Uniform samples from the input box, box vertices included first.
inline std::vector<std::vector<double>> sample_inputs(const relubound::Network& net, std::size_t count,
                                                      std::uint64_t seed) {
    std::vector<std::vector<double>> out;
    const std::size_t d = net.input_dim;
    if (d <= 10) {
        for (std::size_t mask = 0; mask < (std::size_t{1} << d) && out.size() < count; ++mask) {
            std::vector<double> x(d);
            for (std::size_t j = 0; j < d; ++j) x[j] = (mask >> j) & 1 ? net.input_ub[j] : net.input_lb[j];
            out.push_back(std::move(x));
        }
    }
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    while (out.size() < count) {
        std::vector<double> x(d);
        for (std::size_t j = 0; j < d; ++j) x[j] = net.input_lb[j] + u(gen) * (net.input_ub[j] - net.input_lb[j]);
        out.push_back(std::move(x));
    }
    return out;
}

/// Random architecture: `inputs` then `depth` hidden layers of random width, then `outputs`.
inline std::vector<std::size_t> random_arch(std::mt19937_64& gen, std::size_t in_lo, std::size_t in_hi,
                                            std::size_t depth_lo, std::size_t depth_hi, std::size_t w_lo,
                                            std::size_t w_hi, std::size_t outputs) {
    auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(gen); };
    std::vector<std::size_t> arch{pick(in_lo, in_hi)};
    const std::size_t depth = pick(depth_lo, depth_hi);
    for (std::size_t l = 0; l < depth; ++l) arch.push_back(pick(w_lo, w_hi));
    arch.push_back(outputs);
    return arch;
}

} // namespace testsupport
