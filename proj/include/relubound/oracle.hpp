#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "relubound/bounds.hpp"
#include "relubound/error.hpp"
#include "relubound/milp_model.hpp"
#include "relubound/network.hpp"
#include "relubound/simplex.hpp"

namespace relubound {

inline constexpr std::size_t kOracleMaxRelus = 20;

/// Exact optimum of pre-activation a_n^(m) over the input box by enumerating every
/// on/off pattern of the ReLUs in layers 1..m-1.
///
/// Under a fixed pattern the network is affine in x, so each pattern reduces to a small
/// LP over the input box alone: the sign constraints of every neuron plus the composed
/// objective. No big-M constants or activation bounds are involved.
inline double brute_force_oracle(const Network& net, std::size_t m, std::size_t n, Sense sense,
                                 const ToleranceConfig& tol = {}) {
    if (m < 1 || m > net.depth()) throw InputError("oracle: layer index out of range");
    if (n >= net.width(m)) throw InputError("oracle: neuron index out of range");
    std::size_t k = 0;
    for (std::size_t l = 1; l < m; ++l) k += net.width(l);
    if (k > kOracleMaxRelus)
        throw InputError("oracle: " + std::to_string(k) + " ReLUs exceed the enumeration cap of " +
                         std::to_string(kOracleMaxRelus));

    const std::size_t n0 = net.input_dim;
    std::optional<double> best;
    const std::uint64_t patterns = std::uint64_t{1} << k;
    for (std::uint64_t pattern = 0; pattern < patterns; ++pattern) {
        MilpModel lp;
        lp.sense = sense;
        for (std::size_t j = 0; j < n0; ++j)
            lp.input_vars.push_back(lp.add_variable(input_var_name(j), net.input_lb[j], net.input_ub[j]));

        // Post-activation of the current layer as coef * x + offset.
        std::vector<std::vector<double>> coef(n0, std::vector<double>(n0, 0.0));
        std::vector<double> offset(n0, 0.0);
        for (std::size_t j = 0; j < n0; ++j) coef[j][j] = 1.0;

        std::size_t bit = 0;
        for (std::size_t l = 1; l <= m; ++l) {
            const Layer& layer = net.layers[l - 1];
            const bool target_layer = l == m;
            std::vector<std::vector<double>> next_coef;
            std::vector<double> next_offset;
            for (std::size_t i = 0; i < layer.width(); ++i) {
                if (target_layer && i != n) continue;
                std::vector<double> c(n0, 0.0);
                double off = layer.bias[i];
                auto w = layer.weights.row(i);
                for (std::size_t p = 0; p < w.size(); ++p) {
                    if (w[p] == 0.0) continue;
                    for (std::size_t q = 0; q < n0; ++q) c[q] += w[p] * coef[p][q];
                    off += w[p] * offset[p];
                }
                if (target_layer) {
                    for (std::size_t q = 0; q < n0; ++q)
                        if (c[q] != 0.0) lp.objective.push_back({lp.input_vars[q], c[q]});
                    next_offset.push_back(off);  // constant part of the objective
                    continue;
                }
                const bool active = (pattern >> bit++) & 1u;
                std::vector<Term> row;
                for (std::size_t q = 0; q < n0; ++q)
                    if (c[q] != 0.0) row.push_back({lp.input_vars[q], c[q]});
                lp.add_constraint(std::move(row), active ? RowSense::ge : RowSense::le, -off);
                if (active) {
                    next_coef.push_back(std::move(c));
                    next_offset.push_back(off);
                } else {
                    next_coef.emplace_back(n0, 0.0);
                    next_offset.push_back(0.0);
                }
            }
            if (target_layer) {
                const SolveResult r = solve_lp(LpProblem::from_model(lp), tol);
                if (r.status == LpStatus::optimal) {
                    const double v = r.objective + next_offset.front();
                    if (!best || (sense == Sense::maximize ? v > *best : v < *best)) best = v;
                } else if (r.status != LpStatus::infeasible) {
                    throw SolverError(std::string("oracle: pattern LP ended with status ") + to_string(r.status));
                }
            }
            coef = std::move(next_coef);
            offset = std::move(next_offset);
        }
    }
    if (!best) throw SolverError("oracle: no feasible activation pattern");
    return *best;
}

} // namespace relubound
