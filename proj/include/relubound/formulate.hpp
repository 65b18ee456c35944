#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "relubound/bounds.hpp"
#include "relubound/milp_model.hpp"
#include "relubound/network.hpp"

namespace relubound {

struct FormulationOptions {
    /// Build the LP relaxation (z continuous in [0, 1]) instead of the MILP.
    bool relax = false;
    /// Fix z and h / h-bar through variable bounds for neurons whose sign is known.
    bool fix_stable = true;
    /// Absolute widening applied to bounds that came out of a numerical solve before
    /// they are used as big-M constants. Closed-form bounds are used as given.
    double bound_margin = 1e-7;
};

/// ReLU encoding of one neuron with pre-activation a in [lb, ub]:
///
///     a = h - hbar,   h <= max(0, ub) z,   hbar <= max(0, -lb) (1 - z),   h, hbar >= 0
///
/// z is binary, or continuous in [0, 1] when `relax` is set. Stably inactive neurons
/// (ub <= 0) get z = h = 0 and stably active ones (lb >= 0) get z = 1, hbar = 0, both
/// through variable bounds only; the rows are always emitted.
inline void relu_block(MilpModel& model, int a, int h, int hbar, int z, double lb, double ub, bool relax,
                       bool fix_stable = true) {
    if (!(lb <= ub)) throw InputError("relu_block: lower bound exceeds upper bound");
    const double up = std::max(0.0, ub);
    const double down = std::max(0.0, -lb);
    const std::string& tag = model.variables[a].name;

    model.add_constraint({{a, 1.0}, {h, -1.0}, {hbar, 1.0}}, RowSense::eq, 0.0, "split_" + tag);
    model.add_constraint({{h, 1.0}, {z, -up}}, RowSense::le, 0.0, "act_" + tag);
    model.add_constraint({{hbar, 1.0}, {z, down}}, RowSense::le, down, "inact_" + tag);

    Variable& zv = model.variables[z];
    zv.kind = relax ? VarKind::continuous : VarKind::binary;
    zv.lb = std::max(zv.lb, 0.0);
    zv.ub = std::min(zv.ub, 1.0);
    model.variables[h].lb = std::max(model.variables[h].lb, 0.0);
    model.variables[hbar].lb = std::max(model.variables[hbar].lb, 0.0);

    if (!fix_stable) return;
    if (ub <= 0.0) {
        zv.lb = zv.ub = 0.0;
        model.variables[h].lb = model.variables[h].ub = 0.0;
    } else if (lb >= 0.0) {
        zv.lb = zv.ub = 1.0;
        model.variables[hbar].lb = model.variables[hbar].ub = 0.0;
    }
}

/// Bounds of neuron (l, j) as used inside a model: solve-produced values are widened.
inline std::pair<double, double> model_bounds(const BoundsSet& bounds, std::size_t l, std::size_t j, double margin) {
    const LayerBounds& b = bounds.layer(l);
    double lb = b.lb[j];
    double ub = b.ub[j];
    if (b.lb_status[j] != BoundStatus::closed_form && b.lb_status[j] != BoundStatus::fallback) lb -= margin;
    if (b.ub_status[j] != BoundStatus::closed_form && b.ub_status[j] != BoundStatus::fallback) ub += margin;
    return {lb, ub};
}

namespace detail {

/// Adds a_j^(l) = W^(l) h^(l-1) + b^(l) for the neurons in `which`. Returns nothing;
/// the new columns are registered in model.neurons.
inline void add_affine_rows(MilpModel& model, const Network& net, std::size_t l, std::span<const std::size_t> which) {
    const Layer& layer = net.layers[l - 1];
    std::vector<int> prev;
    if (l == 1) prev = model.input_vars;
    else
        for (const NeuronVars& nv : model.neurons[l - 2]) prev.push_back(nv.h);
    for (std::size_t j : which) {
        const int a = model.add_variable(neuron_var_name("a", l, j), -kInf, kInf);
        model.neuron(l, j).a = a;
        std::vector<Term> terms;
        terms.push_back({a, 1.0});
        auto w = layer.weights.row(j);
        for (std::size_t k = 0; k < w.size(); ++k)
            if (w[k] != 0.0) terms.push_back({prev[k], -w[k]});
        model.add_constraint(std::move(terms), RowSense::eq, layer.bias[j], "aff_" + neuron_var_name("a", l, j));
    }
}

/// Inputs boxed by [box_lb, box_ub], then affine rows and ReLU blocks for layers 1..last_relu.
inline void encode_prefix(MilpModel& model, const Network& net, const BoundsSet& bounds, std::size_t last_relu,
                          std::span<const double> box_lb, std::span<const double> box_ub,
                          const FormulationOptions& opt) {
    for (std::size_t j = 0; j < net.input_dim; ++j)
        model.input_vars.push_back(model.add_variable(input_var_name(j), box_lb[j], box_ub[j]));
    model.neurons.resize(last_relu);
    for (std::size_t l = 1; l <= last_relu; ++l) {
        std::vector<std::size_t> all(net.width(l));
        for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
        add_affine_rows(model, net, l, all);
        for (std::size_t j = 0; j < all.size(); ++j) {
            NeuronVars& nv = model.neuron(l, j);
            nv.h = model.add_variable(neuron_var_name("h", l, j), 0.0, kInf);
            nv.hbar = model.add_variable(neuron_var_name("hb", l, j), 0.0, kInf);
            nv.z = model.add_variable(neuron_var_name("z", l, j), 0.0, 1.0, opt.relax ? VarKind::continuous : VarKind::binary);
            auto [lb, ub] = model_bounds(bounds, l, j, opt.bound_margin);
            relu_block(model, nv.a, nv.h, nv.hbar, nv.z, lb, ub, opt.relax, opt.fix_stable);
        }
    }
}

} // namespace detail

/// Model whose optimum is the max (or min) of pre-activation a_n^(m) over the input box,
/// using the bounds of layers 1..m-1 for the big-M constants. Layers and neurons are
/// 1-based and 0-based respectively.
inline MilpModel build_obbt(const Network& net, const BoundsSet& bounds, std::size_t m, std::size_t n, Sense sense,
                            const FormulationOptions& opt = {}) {
    if (m < 1 || m > net.depth()) throw InputError("build_obbt: layer index out of range");
    if (n >= net.width(m)) throw InputError("build_obbt: neuron index out of range");
    bounds.check_covers(net, m - 1);

    MilpModel model;
    model.name = std::string(opt.relax ? "weak" : "strong") + "_obbt_" + neuron_var_name(to_string(sense), m, n);
    detail::encode_prefix(model, net, bounds, m - 1, net.input_lb, net.input_ub, opt);
    const std::size_t target[] = {n};
    detail::add_affine_rows(model, net, m, target);
    model.objective = {{model.neuron(m, n).a, 1.0}};
    model.sense = sense;
    return model;
}

/// Reference input, perturbation budget (infinity norm) and target selection.
struct VerifyConfig {
    std::vector<double> x0;
    double radius = 0.0;
    std::optional<std::size_t> target;  ///< unset means every class other than the reference
    double time_limit = 60.0;
    /// Stop after the first class proven adversarial.
    bool early_exit = false;

    void validate(const Network& net) const {
        if (x0.size() != net.input_dim) throw InputError("verify: x0 length does not match the network input");
        if (!(radius >= 0.0) || !std::isfinite(radius)) throw InputError("verify: radius must be finite and nonnegative");
        for (std::size_t j = 0; j < x0.size(); ++j)
            if (!(x0[j] >= net.input_lb[j] && x0[j] <= net.input_ub[j]))
                throw InputError("verify: x0 lies outside the input box at index " + std::to_string(j));
        if (target && *target >= net.output_dim()) throw InputError("verify: target class out of range");
    }

    /// Perturbation ball intersected with the input box.
    std::pair<std::vector<double>, std::vector<double>> box(const Network& net) const {
        std::vector<double> lo(x0.size()), hi(x0.size());
        for (std::size_t j = 0; j < x0.size(); ++j) {
            lo[j] = std::max(net.input_lb[j], x0[j] - radius);
            hi[j] = std::min(net.input_ub[j], x0[j] + radius);
        }
        return {lo, hi};
    }
};

/// Maximizes logit_target - logit_reference over the perturbation box, where the reference
/// class is the prediction at x0. A positive optimum means an input in the box is
/// classified as `target` rather than the reference.
inline MilpModel build_verification(const Network& net, const BoundsSet& bounds, const VerifyConfig& cfg,
                                    std::size_t target, const FormulationOptions& opt = {}) {
    cfg.validate(net);
    const std::size_t L = net.depth();
    if (target >= net.output_dim()) throw InputError("build_verification: target class out of range");
    const std::size_t reference = classify(net, cfg.x0);
    if (target == reference)
        throw InputError("build_verification: target class equals the reference class " + std::to_string(reference));
    bounds.check_covers(net, L - 1);

    MilpModel model;
    model.name = "verify_target_" + std::to_string(target);
    auto [lo, hi] = cfg.box(net);
    detail::encode_prefix(model, net, bounds, L - 1, lo, hi, opt);
    std::vector<std::size_t> outputs(net.output_dim());
    for (std::size_t k = 0; k < outputs.size(); ++k) outputs[k] = k;
    model.neurons.resize(L);
    detail::add_affine_rows(model, net, L, outputs);
    model.objective = {{model.neuron(L, target).a, 1.0}, {model.neuron(L, reference).a, -1.0}};
    model.sense = Sense::maximize;
    return model;
}

} // namespace relubound
