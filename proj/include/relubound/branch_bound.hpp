#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <optional>
#include <queue>
#include <span>
#include <utility>
#include <vector>

#include "relubound/error.hpp"
#include "relubound/milp_model.hpp"
#include "relubound/network.hpp"
#include "relubound/simplex.hpp"

namespace relubound {

struct BnbConfig {
    double time_limit = 60.0;
    double rel_gap_tol = 1e-6;
    double int_tol = 1e-6;
    std::size_t node_limit = 10'000'000;
    bool heuristic_enabled = true;
    ToleranceConfig lp;

    void validate() const {
        if (!(time_limit > 0.0)) throw InputError("bnb: time limit must be positive");
        if (!(rel_gap_tol > 0.0) || !(int_tol > 0.0)) throw InputError("bnb: tolerances must be positive");
    }
};

enum class MilpStatus { optimal, time_limit, infeasible };

inline const char* to_string(MilpStatus s) {
    switch (s) {
    case MilpStatus::optimal: return "optimal";
    case MilpStatus::time_limit: return "time_limit";
    case MilpStatus::infeasible: return "infeasible";
    }
    return "?";
}

/// Snapshot of the search after a node has been processed.
struct BnbProgress {
    std::size_t nodes = 0;
    std::optional<double> dual_bound;
    std::optional<double> incumbent;
};

struct MilpResult {
    MilpStatus status = MilpStatus::infeasible;
    std::optional<double> incumbent;
    std::optional<double> dual_bound;
    std::vector<double> solution;
    std::size_t nodes = 0;      ///< explored nodes: the root plus every node branched on
    std::size_t lp_solves = 0;  ///< LP relaxations solved, including children pruned on evaluation
    std::size_t lp_iterations = 0;
    double wall_time = 0.0;
    /// True when the incumbent was produced by the forward-pass repair (its value is then
    /// the exact network output at the incumbent's inputs).
    bool incumbent_from_forward = false;
    std::vector<BnbProgress> trace;
    Sense sense = Sense::maximize;

    /// (dual - incumbent) / max(|incumbent|, 1e-10), sign-adjusted for minimization.
    std::optional<double> relative_gap() const {
        if (!incumbent || !dual_bound) return std::nullopt;
        const double diff = sense == Sense::maximize ? *dual_bound - *incumbent : *incumbent - *dual_bound;
        return diff / std::max(std::abs(*incumbent), 1e-10);
    }
};

/// Full model point induced by evaluating the network at the model's input coordinates
/// of `lp_x` (clamped to their boxes). Returns nothing if the point violates the model
/// by more than `tol`, which only happens when the model's bounds are invalid.
inline std::optional<std::vector<double>> forward_repair(const MilpModel& model, const Network& net,
                                                         std::span<const double> lp_x, double tol = 1e-6) {
    if (model.input_vars.size() != net.input_dim) return std::nullopt;
    std::vector<double> input(net.input_dim);
    for (std::size_t j = 0; j < net.input_dim; ++j) {
        const Variable& v = model.variables[model.input_vars[j]];
        input[j] = std::clamp(lp_x[model.input_vars[j]], v.lb, v.ub);
    }
    const Activations act = forward(net, input);
    std::vector<double> point(model.num_vars(), 0.0);
    for (std::size_t j = 0; j < net.input_dim; ++j) point[model.input_vars[j]] = input[j];
    for (std::size_t l = 0; l < model.neurons.size(); ++l) {
        for (std::size_t j = 0; j < model.neurons[l].size(); ++j) {
            const NeuronVars& nv = model.neurons[l][j];
            if (nv.a < 0) continue;
            const double a = act.pre[l][j];
            point[nv.a] = a;
            if (nv.h >= 0) point[nv.h] = std::max(0.0, a);
            if (nv.hbar >= 0) point[nv.hbar] = std::max(0.0, -a);
            if (nv.z >= 0) {
                const Variable& z = model.variables[nv.z];
                if (a > 0.0) point[nv.z] = 1.0;
                else if (a < 0.0) point[nv.z] = 0.0;
                else point[nv.z] = z.ub >= 1.0 ? 1.0 : 0.0;
            }
        }
    }
    if (model.max_violation(point) > tol) return std::nullopt;
    return point;
}

namespace detail {

struct BnbNode {
    double bound;  // in maximization score space
    std::size_t id;
    std::vector<std::pair<int, double>> fixings;
    std::vector<double> x;
};

struct NodeOrder {
    bool operator()(const BnbNode& a, const BnbNode& b) const {
        if (a.bound != b.bound) return a.bound < b.bound;
        return a.id > b.id;
    }
};

} // namespace detail

/// Best-first branch-and-bound over the binary columns of `model`, which must come from
/// the formulation helpers so that `net` can repair LP points into feasible ones.
///
/// The root LP is always solved, so a dual bound exists unless the root fails. The time
/// and node limits are checked before every node selection, the first one included;
/// `optimal` is reported only when the search closes within the limits.
inline MilpResult solve_milp(const MilpModel& model, const Network& net, const BnbConfig& cfg = {}) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

    const double sign = model.sense == Sense::maximize ? 1.0 : -1.0;
    const LpProblem lp = LpProblem::from_model(model);
    const std::vector<int> binaries = model.binaries();

    MilpResult res;
    res.sense = model.sense;
    std::optional<double> best;  // incumbent score
    double pruned_max = -kInf;   // largest bound discarded by the gap tolerance

    auto gap_tol = [&] { return best ? cfg.rel_gap_tol * std::abs(*best) : 0.0; };
    auto to_value = [&](double score) { return sign * score; };

    auto offer = [&](std::vector<double> point, double score, bool from_forward) {
        if (best && score <= *best) return;
        best = score;
        res.solution = std::move(point);
        res.incumbent_from_forward = from_forward;
    };

    auto most_fractional = [&](const std::vector<double>& x) -> int {
        int pick = -1;
        double frac = cfg.int_tol;
        for (int j : binaries) {
            const double f = std::abs(x[j] - std::round(x[j]));
            if (f > frac) {
                frac = f;
                pick = j;
            }
        }
        return pick;
    };

    // Incumbent candidates from an LP point: the forward repair, and the LP point itself
    // when it is already integral.
    auto harvest = [&](const std::vector<double>& x, bool integral) {
        if (cfg.heuristic_enabled || integral) {
            if (auto p = forward_repair(model, net, x)) {
                const double score = sign * model.objective_value(*p);
                offer(std::move(*p), score, true);
                return;
            }
        }
        if (integral) {
            std::vector<double> p = x;
            for (int j : binaries) p[j] = std::round(p[j]);
            offer(std::move(p), sign * model.objective_value(x), false);
        }
    };

    auto record = [&](std::optional<double> dual_score) {
        BnbProgress pr;
        pr.nodes = res.nodes;
        if (dual_score) pr.dual_bound = to_value(*dual_score);
        if (best) pr.incumbent = to_value(*best);
        res.trace.push_back(pr);
    };

    auto finish = [&](MilpStatus st, std::optional<double> dual_score) {
        res.status = st;
        if (best) res.incumbent = to_value(*best);
        if (dual_score) res.dual_bound = to_value(*dual_score);
        res.wall_time = elapsed();
        return res;
    };

    const SolveResult root = solve_lp(lp, cfg.lp);
    res.nodes = 1;
    res.lp_solves = 1;
    res.lp_iterations += root.iterations;
    if (root.status == LpStatus::infeasible) return finish(MilpStatus::infeasible, std::nullopt);
    if (root.status != LpStatus::optimal) return finish(MilpStatus::time_limit, std::nullopt);

    std::priority_queue<detail::BnbNode, std::vector<detail::BnbNode>, detail::NodeOrder> open;
    std::size_t next_id = 0;
    double unresolved = -kInf;  // bound of children whose LP failed; they stay open forever

    {
        const double score = sign * root.objective;
        const bool integral = most_fractional(root.x) < 0;
        harvest(root.x, integral);
        if (!integral) open.push({score, next_id++, {}, root.x});
        else pruned_max = std::min(score, *best + gap_tol());
        record(std::max(score, best.value_or(-kInf)));
    }

    while (true) {
        const double open_bound = open.empty() ? -kInf : open.top().bound;
        const double dual_now = std::max({open_bound, unresolved, best.value_or(-kInf)});

        if (elapsed() >= cfg.time_limit || res.nodes >= cfg.node_limit)
            return finish(MilpStatus::time_limit,
                          std::isfinite(dual_now) ? std::optional<double>(std::max(dual_now, pruned_max)) : std::nullopt);

        if (open.empty() || (best && open.top().bound <= *best + gap_tol())) {
            if (std::isfinite(unresolved))
                return finish(MilpStatus::time_limit, std::max({dual_now, pruned_max}));
            if (!best) return finish(MilpStatus::infeasible, std::nullopt);
            if (!open.empty()) pruned_max = std::max(pruned_max, open.top().bound);
            return finish(MilpStatus::optimal, std::max(*best, pruned_max));
        }

        detail::BnbNode node = open.top();
        open.pop();
        ++res.nodes;
        const int branch = most_fractional(node.x);

        for (double value : {0.0, 1.0}) {
            std::vector<std::pair<int, double>> fix = node.fixings;
            fix.emplace_back(branch, value);
            const SolveResult child = fix_and_resolve(lp, fix, cfg.lp);
            ++res.lp_solves;
            res.lp_iterations += child.iterations;
            if (child.status == LpStatus::infeasible) continue;
            if (child.status != LpStatus::optimal) {
                unresolved = std::max(unresolved, node.bound);
                continue;
            }
            const double score = std::min(node.bound, sign * child.objective);
            const bool integral = most_fractional(child.x) < 0;
            harvest(child.x, integral);
            if (integral) {
                // The integral LP point is the network evaluated at its inputs, so it differs
                // from the repaired incumbent only by LP round-off.
                pruned_max = std::max(pruned_max, std::min(score, *best + gap_tol()));
                continue;
            }
            if (best && score <= *best + gap_tol()) {
                pruned_max = std::max(pruned_max, score);
                continue;
            }
            open.push({score, next_id++, std::move(fix), child.x});
        }
        const double after =
            std::max({open.empty() ? -kInf : open.top().bound, unresolved, best.value_or(-kInf), pruned_max});
        record(std::isfinite(after) ? std::optional<double>(after) : std::nullopt);
    }
}

} // namespace relubound
