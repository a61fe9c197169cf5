#include "cfkd/numcore/mlp.hpp"

#include "cfkd/errors.hpp"
#include "cfkd/numcore/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace cfkd::numcore {

std::string to_string(Activation a) {
    switch (a) {
    case Activation::ReLU:
        return "relu";
    case Activation::LeakyReLU:
        return "leaky_relu";
    case Activation::Identity:
        return "identity";
    }
    return "unknown";
}

Activation activation_from_string(const std::string& name) {
    if (name == "relu" || name == "ReLU") {
        return Activation::ReLU;
    }
    if (name == "leaky_relu" || name == "LeakyReLU") {
        return Activation::LeakyReLU;
    }
    if (name == "identity") {
        return Activation::Identity;
    }
    throw ConfigError("unknown activation '" + name + "'");
}

double activate(Activation a, double z) {
    switch (a) {
    case Activation::ReLU:
        return z > 0.0 ? z : 0.0;
    case Activation::LeakyReLU:
        return z > 0.0 ? z : kLeakySlope * z;
    case Activation::Identity:
        return z;
    }
    return z;
}

double activate_derivative(Activation a, double z) {
    switch (a) {
    case Activation::ReLU:
        return z > 0.0 ? 1.0 : 0.0;
    case Activation::LeakyReLU:
        return z > 0.0 ? 1.0 : kLeakySlope;
    case Activation::Identity:
        return 1.0;
    }
    return 1.0;
}

std::size_t MlpSpec::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        n += layer_dims[l] * layer_dims[l + 1] + layer_dims[l + 1];
    }
    return n;
}

void validate(const MlpSpec& spec) {
    if (spec.layer_dims.size() < 2) {
        throw ConfigError("MlpSpec: need at least an input and an output width");
    }
    for (std::size_t d : spec.layer_dims) {
        if (d == 0) {
            throw ConfigError("MlpSpec: layer widths must be >= 1");
        }
    }
}

std::size_t MlpState::frozen_prefix() const {
    std::size_t n = 0;
    while (n < layers.size() && layers[n].frozen) {
        ++n;
    }
    return n;
}

GradientSet GradientSet::zeros_like(const MlpState& state) {
    GradientSet g;
    g.layers.reserve(state.layers.size());
    for (const auto& layer : state.layers) {
        g.layers.push_back({Tensor2D(layer.weight.rows(), layer.weight.cols()),
                            std::vector<double>(layer.bias.size(), 0.0)});
    }
    return g;
}

void GradientSet::accumulate(const GradientSet& other, double scale) {
    require(other.layers.size() == layers.size(), "GradientSet::accumulate: layer count mismatch");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        auto dst = layers[l].weight.values();
        const auto src = other.layers[l].weight.values();
        require(dst.size() == src.size(), "GradientSet::accumulate: shape mismatch");
        for (std::size_t i = 0; i < dst.size(); ++i) {
            dst[i] += scale * src[i];
        }
        for (std::size_t i = 0; i < layers[l].bias.size(); ++i) {
            layers[l].bias[i] += scale * other.layers[l].bias[i];
        }
    }
}

double GradientSet::max_abs() const {
    double m = 0.0;
    for (const auto& layer : layers) {
        for (double v : layer.weight.values()) {
            m = std::max(m, std::abs(v));
        }
        for (double v : layer.bias) {
            m = std::max(m, std::abs(v));
        }
    }
    return m;
}

MlpState mlp_init(const MlpSpec& spec) {
    validate(spec);
    MlpState state;
    state.spec = spec;
    Rng rng(derive_seed({spec.init_seed, 0x4D4C50ULL}));
    for (std::size_t l = 0; l < spec.layer_count(); ++l) {
        const std::size_t fan_in = spec.layer_dims[l];
        const std::size_t fan_out = spec.layer_dims[l + 1];
        const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
        DenseLayer layer{Tensor2D(fan_in, fan_out), std::vector<double>(fan_out, 0.0), false};
        for (double& w : layer.weight.values()) {
            w = draw_normal(rng, 0.0, stddev);
        }
        state.layers.push_back(std::move(layer));
    }
    return state;
}

namespace {

bool layer_is_activated(const MlpState& state, std::size_t l) {
    return l + 1 < state.layers.size() || state.spec.activate_output;
}

Tensor2D affine(const DenseLayer& layer, const Tensor2D& x) {
    Tensor2D z = matmul(x, layer.weight);
    add_row_vector(z, layer.bias);
    return z;
}

void apply_activation(Activation a, Tensor2D& t) {
    if (a == Activation::Identity) {
        return;
    }
    for (double& v : t.values()) {
        v = activate(a, v);
    }
}

void check_input(const MlpState& state, const Tensor2D& batch, std::size_t first_layer) {
    require(first_layer < state.layers.size(), "forward: first layer out of range");
    const std::size_t expected = state.layers[first_layer].weight.rows();
    require(batch.cols() == expected, "forward: batch has " + std::to_string(batch.cols()) +
                                          " columns, layer expects " + std::to_string(expected));
}

} // namespace

ForwardResult forward(const MlpState& state, const Tensor2D& batch, bool capture_hidden) {
    check_input(state, batch, 0);
    ForwardResult result;
    Tensor2D a = batch;
    const std::size_t L = state.layers.size();
    for (std::size_t l = 0; l < L; ++l) {
        Tensor2D z = affine(state.layers[l], a);
        if (layer_is_activated(state, l)) {
            apply_activation(state.spec.activation, z);
        }
        a = std::move(z);
        if (capture_hidden && l + 2 == L) {
            result.last_hidden = a;
        }
    }
    if (capture_hidden && L == 1) {
        result.last_hidden = batch;
    }
    if (!a.all_finite()) {
        throw NumericError("forward: non-finite network output");
    }
    result.predictions = std::move(a);
    return result;
}

ForwardTrace forward_trace(const MlpState& state, const Tensor2D& batch, std::size_t first_layer) {
    check_input(state, batch, first_layer);
    ForwardTrace trace;
    trace.first_layer = first_layer;
    Tensor2D a = batch;
    for (std::size_t l = first_layer; l < state.layers.size(); ++l) {
        Tensor2D z = affine(state.layers[l], a);
        trace.inputs.push_back(std::move(a));
        Tensor2D out = z;
        if (layer_is_activated(state, l)) {
            apply_activation(state.spec.activation, out);
        }
        trace.pre_activations.push_back(std::move(z));
        a = std::move(out);
    }
    trace.output = std::move(a);
    return trace;
}

Tensor2D forward_prefix(const MlpState& state, const Tensor2D& batch, std::size_t layer_end) {
    require(layer_end <= state.layers.size(), "forward_prefix: layer_end out of range");
    if (layer_end == 0) {
        return batch;
    }
    check_input(state, batch, 0);
    Tensor2D a = batch;
    for (std::size_t l = 0; l < layer_end; ++l) {
        Tensor2D z = affine(state.layers[l], a);
        if (layer_is_activated(state, l)) {
            apply_activation(state.spec.activation, z);
        }
        a = std::move(z);
    }
    return a;
}

GradientSet backward_from(const MlpState& state, const ForwardTrace& trace, const Tensor2D& output_grad,
                          Tensor2D* input_grad) {
    require(output_grad.rows() == trace.output.rows() && output_grad.cols() == trace.output.cols(),
            "backward_from: output gradient shape mismatch");
    GradientSet grads = GradientSet::zeros_like(state);
    const std::size_t first = trace.first_layer;
    const std::size_t stop = input_grad ? first : std::max(first, state.frozen_prefix());
    Tensor2D delta = output_grad;
    for (std::size_t l = state.layers.size(); l-- > stop;) {
        const std::size_t t = l - first;
        if (layer_is_activated(state, l)) {
            const auto z = trace.pre_activations[t].values();
            auto d = delta.values();
            for (std::size_t i = 0; i < d.size(); ++i) {
                d[i] *= activate_derivative(state.spec.activation, z[i]);
            }
        }
        const DenseLayer& layer = state.layers[l];
        if (!layer.frozen) {
            grads.layers[l].weight = matmul_tn(trace.inputs[t], delta);
            grads.layers[l].bias = column_sums(delta);
        }
        if (l > stop || input_grad) {
            delta = matmul_nt(delta, layer.weight);
        }
    }
    if (input_grad) {
        *input_grad = std::move(delta);
    }
    return grads;
}

double mse_loss_grad(const Tensor2D& predictions, const Tensor2D& targets, Tensor2D* grad) {
    require(predictions.rows() > 0, "mse loss: empty batch");
    require(predictions.rows() == targets.rows() && predictions.cols() == targets.cols(),
            "mse loss: prediction/target shape mismatch");
    const auto p = predictions.values();
    const auto y = targets.values();
    const double n = static_cast<double>(p.size());
    double loss = 0.0;
    if (grad) {
        *grad = Tensor2D(predictions.rows(), predictions.cols());
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double r = p[i] - y[i];
        loss += r * r;
        if (grad) {
            grad->values()[i] = 2.0 * r / n;
        }
    }
    return loss / n;
}

LossAndGradients backward(const MlpState& state, const Tensor2D& batch, const Tensor2D& targets) {
    require(batch.rows() > 0, "backward: empty batch");
    require(batch.rows() == targets.rows(), "backward: batch/target row mismatch");
    require(targets.cols() == state.output_dim(), "backward: target width mismatch");
    const ForwardTrace trace = forward_trace(state, batch);
    Tensor2D grad;
    LossAndGradients out;
    out.loss = mse_loss_grad(trace.output, targets, &grad);
    out.grads = backward_from(state, trace, grad);
    return out;
}

MlpState set_frozen(MlpState state, std::size_t first_unfrozen_layer_index) {
    require(first_unfrozen_layer_index <= state.layers.size(),
            "set_frozen: index " + std::to_string(first_unfrozen_layer_index) + " exceeds layer count " +
                std::to_string(state.layers.size()));
    for (std::size_t l = 0; l < state.layers.size(); ++l) {
        state.layers[l].frozen = l < first_unfrozen_layer_index;
    }
    return state;
}

std::uint64_t parameter_hash(const MlpState& state) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](double v) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof(double));
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& layer : state.layers) {
        for (double w : layer.weight.values()) {
            mix(w);
        }
        for (double b : layer.bias) {
            mix(b);
        }
    }
    return h;
}

std::size_t parameter_count(const MlpState& state) {
    return state.spec.parameter_count();
}

} // namespace cfkd::numcore
