#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <span>
#include <vector>

#include "relubound/bounds.hpp"
#include "relubound/network.hpp"

namespace relubound {

/// Post-activation interval [p, q] feeding layer `l` (1-based): the input box for l = 1,
/// otherwise the ReLU image of the bounds of layer l - 1.
inline void incoming_interval(const Network& net, std::size_t l, const LayerBounds* prev, std::vector<double>& lo,
                              std::vector<double>& hi) {
    if (l == 1) {
        lo = net.input_lb;
        hi = net.input_ub;
        return;
    }
    lo.resize(prev->width());
    hi.resize(prev->width());
    for (std::size_t j = 0; j < prev->width(); ++j) {
        lo[j] = std::max(0.0, prev->lb[j]);
        hi[j] = std::max(0.0, prev->ub[j]);
    }
}

/// Norm-based magnitude bound for every pre-activation of layer `l`:
///
///     |a_i| <= ||W||_inf * max_j U_j + ||b||_inf
///
/// where U_j bounds the magnitude of the incoming value j. For the input layer U_j is
/// max(|lb_j|, |ub_j|) so that negative input boxes are covered; after a ReLU it is max(0, ub_j).
inline double norm_layer_bound(const Network& net, std::size_t l, const LayerBounds* prev) {
    double magnitude = 0.0;
    if (l == 1) {
        for (std::size_t j = 0; j < net.input_dim; ++j)
            magnitude = std::max({magnitude, std::abs(net.input_lb[j]), std::abs(net.input_ub[j])});
    } else {
        for (double u : prev->ub) magnitude = std::max(magnitude, u);
    }
    const Layer& layer = net.layers[l - 1];
    double bias_norm = 0.0;
    for (double b : layer.bias) bias_norm = std::max(bias_norm, std::abs(b));
    return layer.weights.inf_norm() * magnitude + bias_norm;
}

inline LayerBounds norm_layer_bounds(const Network& net, std::size_t l, const LayerBounds* prev) {
    const double bound = norm_layer_bound(net, l, prev);
    LayerBounds out(net.width(l));
    std::fill(out.lb.begin(), out.lb.end(), -bound);
    std::fill(out.ub.begin(), out.ub.end(), bound);
    return out;
}

/// Interval arithmetic through one affine layer, splitting weights by sign.
inline LayerBounds interval_layer_bounds(const Network& net, std::size_t l, const LayerBounds* prev) {
    std::vector<double> lo, hi;
    incoming_interval(net, l, prev, lo, hi);
    const Layer& layer = net.layers[l - 1];
    LayerBounds out(layer.width());
    for (std::size_t i = 0; i < layer.width(); ++i) {
        double up = layer.bias[i];
        double down = layer.bias[i];
        auto w = layer.weights.row(i);
        for (std::size_t j = 0; j < w.size(); ++j) {
            if (w[j] >= 0.0) {
                up += w[j] * hi[j];
                down += w[j] * lo[j];
            } else {
                up += w[j] * lo[j];
                down += w[j] * hi[j];
            }
        }
        out.lb[i] = down;
        out.ub[i] = up;
    }
    return out;
}

namespace detail {

template <class LayerFn>
BoundsSet propagate_all(const Network& net, BoundMethod method, LayerFn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    BoundsSet out;
    out.method = method;
    out.network_name = net.name;
    out.layers.reserve(net.depth());
    for (std::size_t l = 1; l <= net.depth(); ++l) {
        const LayerBounds* prev = l == 1 ? nullptr : &out.layers.back();
        out.layers.push_back(fn(net, l, prev));
    }
    out.total_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

} // namespace detail

/// Closed-form norm bounds for every layer, one scalar per layer replicated over its neurons.
inline BoundsSet naive_norm_bounds(const Network& net) {
    return detail::propagate_all(net, BoundMethod::naive_norm, norm_layer_bounds);
}

/// Interval-arithmetic bounds for every layer.
inline BoundsSet interval_bounds(const Network& net) {
    return detail::propagate_all(net, BoundMethod::naive_interval, interval_layer_bounds);
}

} // namespace relubound
