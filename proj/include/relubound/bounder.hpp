#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "relubound/bounds.hpp"
#include "relubound/branch_bound.hpp"
#include "relubound/error.hpp"
#include "relubound/formulate.hpp"
#include "relubound/lp_writer.hpp"
#include "relubound/network.hpp"
#include "relubound/propagate.hpp"
#include "relubound/simplex.hpp"

namespace relubound {

struct BounderConfig {
    BoundMethod method = BoundMethod::weak;
    /// Per-layer methods for BoundMethod::hybrid; entry l - 1 is used for layer l.
    std::vector<BoundMethod> layer_methods;
    /// Limit for each individual (neuron, direction) MILP solve, in seconds.
    double time_limit = 60.0;
    std::size_t workers = 1;
    ToleranceConfig lp;
    double rel_gap_tol = 1e-6;
    double int_tol = 1e-6;
    std::size_t node_limit = 10'000'000;
    /// Replace failed solves by the norm bound of the previous layer. When off, a failed
    /// solve aborts the run.
    bool fallback = true;
    FormulationOptions formulation;
    /// When set, every OBBT model is also written there as an LP file.
    std::optional<std::filesystem::path> export_dir;

    BoundMethod method_for(std::size_t l) const {
        return method == BoundMethod::hybrid ? layer_methods.at(l - 1) : method;
    }

    void validate(const Network& net) const {
        if (workers < 1) throw InputError("bounder: worker count must be at least 1");
        if (method == BoundMethod::hybrid) {
            if (layer_methods.size() != net.depth())
                throw InputError("bounder: hybrid runs need one method per layer (" + std::to_string(net.depth()) + ")");
            for (BoundMethod m : layer_methods)
                if (m == BoundMethod::hybrid) throw InputError("bounder: nested hybrid method");
        }
        bool solves = method == BoundMethod::weak || method == BoundMethod::strong;
        for (BoundMethod m : layer_methods) solves |= m == BoundMethod::weak || m == BoundMethod::strong;
        if (solves && !(time_limit > 0.0)) throw InputError("bounder: time limit must be positive");
    }
};

namespace detail {

struct SenseOutcome {
    double value = 0.0;
    BoundStatus status = BoundStatus::fallback;
    double seconds = 0.0;
};

inline std::string export_name(BoundMethod method, std::size_t m, std::size_t n, Sense sense) {
    return std::string(to_string(method)) + "_L" + std::to_string(m) + "_N" + std::to_string(n) + "_" +
           to_string(sense) + ".lp";
}

/// One OBBT solve. `fallback` is the norm bound of the layer (a magnitude).
inline SenseOutcome solve_neuron(const Network& net, const BoundsSet& prior, std::size_t m, std::size_t n,
                                 Sense sense, BoundMethod method, double fallback, const BounderConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    FormulationOptions fopt = cfg.formulation;
    fopt.relax = method == BoundMethod::weak;
    const MilpModel model = build_obbt(net, prior, m, n, sense, fopt);
    if (cfg.export_dir) export_lp(model, *cfg.export_dir / export_name(method, m, n, sense));

    const double sign = sense == Sense::maximize ? 1.0 : -1.0;
    const double fallback_value = sign * fallback;
    std::optional<double> solved;
    std::optional<double> dual;
    std::string failure;

    if (method == BoundMethod::weak) {
        const SolveResult r = solve_lp(LpProblem::from_model(model), cfg.lp);
        if (r.status == LpStatus::optimal) solved = r.objective;
        else failure = std::string("LP ") + to_string(r.status);
    } else {
        BnbConfig bnb;
        bnb.time_limit = cfg.time_limit;
        bnb.rel_gap_tol = cfg.rel_gap_tol;
        bnb.int_tol = cfg.int_tol;
        bnb.node_limit = cfg.node_limit;
        bnb.lp = cfg.lp;
        const MilpResult r = solve_milp(model, net, bnb);
        if (r.status == MilpStatus::optimal) solved = r.dual_bound;
        else if (r.dual_bound) dual = r.dual_bound;
        else failure = std::string("MILP ") + to_string(r.status);
    }

    SenseOutcome out;
    if (solved) {
        out.value = *solved;
        out.status = method == BoundMethod::weak ? BoundStatus::lp_optimal : BoundStatus::milp_optimal;
    } else if (dual) {
        // Keep whichever of the dual bound and the norm bound is tighter.
        const bool dual_tighter = sign * *dual <= sign * fallback_value;
        out.value = dual_tighter ? *dual : fallback_value;
        out.status = dual_tighter ? BoundStatus::dual_bound : BoundStatus::fallback;
    } else {
        if (!cfg.fallback)
            throw SolverError("bounder: " + failure + " at layer " + std::to_string(m) + ", neuron " +
                              std::to_string(n) + " (" + to_string(sense) + ")");
        out.value = fallback_value;
        out.status = BoundStatus::fallback;
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

/// Runs fn(task) for task in [0, count) on up to `workers` threads. Exceptions are
/// rethrown after all threads join; the one from the lowest task index wins.
template <class Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t t = next.fetch_add(1); t < count; t = next.fetch_add(1)) {
            try {
                fn(t);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::min(workers, count);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace detail

/// Computes bounds for layers 1..L in order. Closed-form layers use the norm or interval
/// recurrences; weak and strong layers solve the LP relaxation or the MILP of the OBBT
/// model for every neuron in both directions, with big-M constants taken from the bounds
/// this run produced for the earlier layers. Neurons of a layer are solved concurrently.
inline BoundsSet run_bounder(const Network& net, const BounderConfig& cfg) {
    net.validate();
    cfg.validate(net);
    if (cfg.export_dir) std::filesystem::create_directories(*cfg.export_dir);
    const auto start = std::chrono::steady_clock::now();

    BoundsSet out;
    out.method = cfg.method;
    out.network_name = net.name;
    out.layers.reserve(net.depth());

    for (std::size_t m = 1; m <= net.depth(); ++m) {
        const BoundMethod method = cfg.method_for(m);
        const LayerBounds* prev = m == 1 ? nullptr : &out.layers.back();
        if (method == BoundMethod::naive_norm) {
            out.layers.push_back(norm_layer_bounds(net, m, prev));
            continue;
        }
        if (method == BoundMethod::naive_interval) {
            out.layers.push_back(interval_layer_bounds(net, m, prev));
            continue;
        }

        const double fallback = norm_layer_bound(net, m, prev);
        const std::size_t width = net.width(m);
        std::vector<detail::SenseOutcome> results(2 * width);
        detail::parallel_for(2 * width, cfg.workers, [&](std::size_t task) {
            const std::size_t n = task / 2;
            const Sense sense = task % 2 == 0 ? Sense::maximize : Sense::minimize;
            results[task] = detail::solve_neuron(net, out, m, n, sense, method, fallback, cfg);
        });

        LayerBounds layer(width);
        for (std::size_t n = 0; n < width; ++n) {
            const auto& up = results[2 * n];
            const auto& down = results[2 * n + 1];
            layer.ub[n] = up.value;
            layer.ub_status[n] = up.status;
            layer.ub_time[n] = up.seconds;
            layer.lb[n] = down.value;
            layer.lb_status[n] = down.status;
            layer.lb_time[n] = down.seconds;
            // A neuron whose range is a single point can come back crossed by round-off.
            if (layer.lb[n] > layer.ub[n]) std::swap(layer.lb[n], layer.ub[n]);
        }
        out.layers.push_back(std::move(layer));
    }
    out.total_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

/// Relative optimality gaps of `other` against reference bounds `strong`.
struct RoGapTable {
    struct Layer {
        std::vector<double> lower;
        std::vector<double> upper;
        double lower_mean = 0.0, lower_max = 0.0;
        double upper_mean = 0.0, upper_max = 0.0;
    };
    std::vector<Layer> layers;  // layers[l - 1]
};

/// |other - reference| / (|reference| + 1e-10)
inline double ro_gap_value(double other, double reference) {
    return std::abs(other - reference) / (std::abs(reference) + 1e-10);
}

inline RoGapTable ro_gap(const BoundsSet& strong, const BoundsSet& other) {
    if (strong.method != BoundMethod::strong)
        throw InputError("ro_gap: reference bounds must come from the strong method, got " +
                         std::string(to_string(strong.method)));
    if (strong.depth() != other.depth()) throw InputError("ro_gap: bound sets have different depths");
    RoGapTable table;
    for (std::size_t l = 1; l <= strong.depth(); ++l) {
        const LayerBounds& s = strong.layer(l);
        const LayerBounds& o = other.layer(l);
        if (s.width() != o.width()) throw InputError("ro_gap: layer " + std::to_string(l) + " widths differ");
        RoGapTable::Layer row;
        for (std::size_t j = 0; j < s.width(); ++j) {
            row.lower.push_back(ro_gap_value(o.lb[j], s.lb[j]));
            row.upper.push_back(ro_gap_value(o.ub[j], s.ub[j]));
        }
        if (!row.lower.empty()) {
            for (std::size_t j = 0; j < row.lower.size(); ++j) {
                row.lower_mean += row.lower[j];
                row.upper_mean += row.upper[j];
                row.lower_max = std::max(row.lower_max, row.lower[j]);
                row.upper_max = std::max(row.upper_max, row.upper[j]);
            }
            row.lower_mean /= static_cast<double>(row.lower.size());
            row.upper_mean /= static_cast<double>(row.upper.size());
        }
        table.layers.push_back(std::move(row));
    }
    return table;
}

inline std::string ro_gap_csv(const BoundsSet& strong, const BoundsSet& other, const RoGapTable& table) {
    std::ostringstream out;
    out << "scope,layer,neuron,lb_strong,lb_other,lb_gap,ub_strong,ub_other,ub_gap\n";
    for (std::size_t l = 1; l <= table.layers.size(); ++l) {
        const auto& row = table.layers[l - 1];
        const LayerBounds& s = strong.layer(l);
        const LayerBounds& o = other.layer(l);
        for (std::size_t j = 0; j < row.lower.size(); ++j)
            out << "neuron," << l << ',' << j << ',' << format_double(s.lb[j]) << ',' << format_double(o.lb[j]) << ','
                << format_double(row.lower[j]) << ',' << format_double(s.ub[j]) << ',' << format_double(o.ub[j])
                << ',' << format_double(row.upper[j]) << '\n';
        out << "layer_mean," << l << ",,,," << format_double(row.lower_mean) << ",,," << format_double(row.upper_mean) << '\n';
        out << "layer_max," << l << ",,,," << format_double(row.lower_max) << ",,," << format_double(row.upper_max) << '\n';
    }
    return out.str();
}

} // namespace relubound
