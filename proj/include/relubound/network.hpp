#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "relubound/error.hpp"

namespace relubound {

/// Dense row-major matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    /// Maximum absolute row sum.
    double inf_norm() const noexcept {
        double best = 0.0;
        for (std::size_t r = 0; r < rows_; ++r) {
            double s = 0.0;
            for (double v : row(r)) s += std::abs(v);
            best = std::max(best, s);
        }
        return best;
    }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

enum class Activation { relu, linear };

inline const char* to_string(Activation a) { return a == Activation::relu ? "relu" : "linear"; }

/// One affine map followed by an activation. Rows of `weights` are output neurons,
/// so the pre-activation is weights * input + bias.
struct Layer {
    Matrix weights;
    std::vector<double> bias;
    Activation activation = Activation::relu;

    std::size_t width() const noexcept { return weights.rows(); }
    std::size_t fan_in() const noexcept { return weights.cols(); }

    bool operator==(const Layer&) const = default;
};

/// Fully connected feed-forward ReLU network with a linear (logit) output layer
/// and a box over its inputs.
struct Network {
    std::string name;
    std::size_t input_dim = 0;
    std::vector<Layer> layers;
    std::vector<double> input_lb;
    std::vector<double> input_ub;

    std::size_t depth() const noexcept { return layers.size(); }

    /// Width of layer l, with layer 0 being the input.
    std::size_t width(std::size_t l) const noexcept { return l == 0 ? input_dim : layers[l - 1].width(); }

    std::size_t output_dim() const noexcept { return layers.empty() ? 0 : layers.back().width(); }

    std::size_t hidden_relu_count() const noexcept {
        std::size_t n = 0;
        for (std::size_t l = 0; l + 1 < layers.size(); ++l) n += layers[l].width();
        return n;
    }

    bool operator==(const Network&) const = default;

    /// Throws InputError on the first violated structural invariant.
    void validate() const {
        if (input_dim == 0) throw InputError("network '" + name + "': input_dim must be positive");
        if (layers.empty()) throw InputError("network '" + name + "': at least one layer is required");
        if (input_lb.size() != input_dim || input_ub.size() != input_dim)
            throw InputError("network '" + name + "': input box length does not match input_dim");
        for (std::size_t j = 0; j < input_dim; ++j) {
            if (!std::isfinite(input_lb[j]) || !std::isfinite(input_ub[j]))
                throw InputError("network '" + name + "': non-finite input bound at index " + std::to_string(j));
            if (input_lb[j] > input_ub[j])
                throw InputError("network '" + name + "': input_lb > input_ub at index " + std::to_string(j));
        }
        std::size_t prev = input_dim;
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const Layer& layer = layers[l];
            const std::string where = "network '" + name + "', layer " + std::to_string(l + 1);
            if (layer.width() == 0) throw InputError(where + ": empty layer");
            if (layer.fan_in() != prev)
                throw InputError(where + ": dimension mismatch, expected " + std::to_string(prev) +
                                 " columns, got " + std::to_string(layer.fan_in()));
            if (layer.bias.size() != layer.width())
                throw InputError(where + ": bias length does not match row count");
            const bool last = l + 1 == layers.size();
            if (last && layer.activation != Activation::linear)
                throw InputError(where + ": output layer must be linear");
            if (!last && layer.activation != Activation::relu)
                throw InputError(where + ": hidden layers must be relu");
            for (double w : layer.weights.data())
                if (!std::isfinite(w)) throw InputError(where + ": non-finite weight");
            for (double b : layer.bias)
                if (!std::isfinite(b)) throw InputError(where + ": non-finite bias");
            prev = layer.width();
        }
    }
};

/// Pre- and post-activation values of every layer. Index 0 holds layer 1.
struct Activations {
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> post;

    const std::vector<double>& output() const { return post.back(); }
};

inline std::vector<double> affine(const Layer& layer, std::span<const double> input) {
    std::vector<double> out(layer.width());
    for (std::size_t i = 0; i < layer.width(); ++i) {
        double s = layer.bias[i];
        auto w = layer.weights.row(i);
        for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * input[j];
        out[i] = s;
    }
    return out;
}

/// Exact layer-by-layer evaluation. The input is not clamped to the box.
inline Activations forward(const Network& net, std::span<const double> x) {
    if (x.size() != net.input_dim)
        throw InputError("forward: input has length " + std::to_string(x.size()) + ", network expects " +
                         std::to_string(net.input_dim));
    Activations act;
    act.pre.reserve(net.depth());
    act.post.reserve(net.depth());
    std::span<const double> current = x;
    for (const Layer& layer : net.layers) {
        act.pre.push_back(affine(layer, current));
        std::vector<double> h = act.pre.back();
        if (layer.activation == Activation::relu)
            for (double& v : h) v = std::max(0.0, v);
        act.post.push_back(std::move(h));
        current = act.post.back();
    }
    return act;
}

/// Index of the largest output, lowest index on ties.
inline std::size_t argmax(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

inline std::size_t classify(const Network& net, std::span<const double> x) {
    return argmax(forward(net, x).output());
}

/// Zeroes every weight (and bias, unless disabled) whose magnitude is strictly below epsilon.
inline Network prune(const Network& net, double epsilon, bool prune_biases = true) {
    if (!(epsilon >= 0.0)) throw InputError("prune: epsilon must be nonnegative");
    Network out = net;
    for (Layer& layer : out.layers) {
        for (double& w : layer.weights.data())
            if (std::abs(w) < epsilon) w = 0.0;
        if (prune_biases)
            for (double& b : layer.bias)
                if (std::abs(b) < epsilon) b = 0.0;
    }
    return out;
}

inline std::size_t count_nonzero_weights(const Network& net) {
    std::size_t n = 0;
    for (const Layer& layer : net.layers)
        for (double w : layer.weights.data()) n += (w != 0.0);
    return n;
}

/// Uniform draw on [-scale, scale] from the top 53 bits of one mt19937_64 output.
/// Written out explicitly because std::uniform_real_distribution is not portable
/// across standard libraries.
inline double uniform_symmetric(std::mt19937_64& gen, double scale) {
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    return scale * (2.0 * u - 1.0);
}

/// Random network with widths `arch` (arch[0] is the input dimension). Weights are
/// drawn layer by layer, row-major, followed by that layer's biases, all from a single
/// std::mt19937_64 seeded with `seed`. The input box is [0, 1]^n0.
inline Network generate_random(std::span<const std::size_t> arch, std::uint64_t seed, double weight_scale,
                               std::string name = {}) {
    if (arch.size() < 2) throw InputError("generate_random: architecture needs an input and at least one layer");
    for (std::size_t w : arch)
        if (w == 0) throw InputError("generate_random: widths must be positive");
    if (!(weight_scale >= 0.0) || !std::isfinite(weight_scale))
        throw InputError("generate_random: weight scale must be finite and nonnegative");

    std::mt19937_64 gen(seed);
    Network net;
    if (name.empty()) {
        name = "rand";
        for (std::size_t w : arch) name += "_" + std::to_string(w);
        name += "_s" + std::to_string(seed);
    }
    net.name = std::move(name);
    net.input_dim = arch[0];
    net.input_lb.assign(arch[0], 0.0);
    net.input_ub.assign(arch[0], 1.0);
    for (std::size_t l = 1; l < arch.size(); ++l) {
        Layer layer;
        layer.weights = Matrix(arch[l], arch[l - 1]);
        for (double& w : layer.weights.data()) w = uniform_symmetric(gen, weight_scale);
        layer.bias.resize(arch[l]);
        for (double& b : layer.bias) b = uniform_symmetric(gen, weight_scale);
        layer.activation = l + 1 == arch.size() ? Activation::linear : Activation::relu;
        net.layers.push_back(std::move(layer));
    }
    return net;
}

inline Network generate_random(std::initializer_list<std::size_t> arch, std::uint64_t seed, double weight_scale,
                               std::string name = {}) {
    std::vector<std::size_t> v(arch);
    return generate_random(std::span<const std::size_t>(v), seed, weight_scale, std::move(name));
}

} // namespace relubound
