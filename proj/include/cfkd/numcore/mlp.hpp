#pragma once

#include "cfkd/numcore/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cfkd::numcore {

enum class Activation { ReLU, LeakyReLU, Identity };

inline constexpr double kLeakySlope = 0.01;

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

double activate(Activation a, double z);
double activate_derivative(Activation a, double z);

/// Feedforward network shape. `layer_dims` lists widths from input to output,
/// so a net with dims [14, 16, 1] has two dense layers. Hidden layers use
/// `activation`; the output layer is linear unless `activate_output` is set.
struct MlpSpec {
    std::vector<std::size_t> layer_dims;
    Activation activation = Activation::ReLU;
    std::uint64_t init_seed = 0;
    bool activate_output = false;

    std::size_t layer_count() const { return layer_dims.empty() ? 0 : layer_dims.size() - 1; }
    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t output_dim() const { return layer_dims.back(); }
    std::size_t parameter_count() const;
};

/// Throws ConfigError unless the spec has at least one dense layer and positive widths.
void validate(const MlpSpec& spec);

/// Weight is stored as (fan_in x fan_out) so that a layer computes x·W + b.
struct DenseLayer {
    Tensor2D weight;
    std::vector<double> bias;
    bool frozen = false;

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct MlpState {
    MlpSpec spec;
    std::vector<DenseLayer> layers;

    std::size_t layer_count() const { return layers.size(); }
    std::size_t input_dim() const { return spec.input_dim(); }
    std::size_t output_dim() const { return spec.output_dim(); }
    /// Number of leading frozen layers.
    std::size_t frozen_prefix() const;
    bool fully_frozen() const { return frozen_prefix() == layers.size(); }

    friend bool operator==(const MlpState& a, const MlpState& b) {
        return a.spec.layer_dims == b.spec.layer_dims && a.spec.activation == b.spec.activation &&
               a.spec.activate_output == b.spec.activate_output && a.layers == b.layers;
    }
};

struct LayerGradient {
    Tensor2D weight;
    std::vector<double> bias;
};

/// Gradients mirroring an MlpState's parameter shapes.
struct GradientSet {
    std::vector<LayerGradient> layers;

    static GradientSet zeros_like(const MlpState& state);
    void accumulate(const GradientSet& other, double scale = 1.0);
    double max_abs() const;
};

/// He initialisation: weights ~ Normal(0, 2/fan_in), biases zero.
MlpState mlp_init(const MlpSpec& spec);

struct ForwardResult {
    Tensor2D predictions;
    std::optional<Tensor2D> last_hidden;
};

/// `last_hidden` is the post-activation output of the final hidden layer.
ForwardResult forward(const MlpState& state, const Tensor2D& batch, bool capture_hidden = false);

/// Per-layer inputs and pre-activations kept for the backward pass.
struct ForwardTrace {
    std::size_t first_layer = 0;
    std::vector<Tensor2D> inputs;
    std::vector<Tensor2D> pre_activations;
    Tensor2D output;
};

/// Runs layers [first_layer, L). `batch` must match the input width of `first_layer`.
ForwardTrace forward_trace(const MlpState& state, const Tensor2D& batch, std::size_t first_layer = 0);

/// Output of the first `layer_end` layers (post-activation). Used to cache a frozen prefix.
Tensor2D forward_prefix(const MlpState& state, const Tensor2D& batch, std::size_t layer_end);

/// Reverse pass from dLoss/dOutput. Frozen layers receive zero gradients. When
/// `input_grad` is null the pass stops at the first unfrozen traced layer.
GradientSet backward_from(const MlpState& state, const ForwardTrace& trace, const Tensor2D& output_grad,
                          Tensor2D* input_grad = nullptr);

struct LossAndGradients {
    double loss = 0.0;
    GradientSet grads;
};

/// Mean squared error over every output entry, with its gradients.
LossAndGradients backward(const MlpState& state, const Tensor2D& batch, const Tensor2D& targets);

/// Mean squared error over all entries; returns the loss and fills dLoss/dPred.
double mse_loss_grad(const Tensor2D& predictions, const Tensor2D& targets, Tensor2D* grad);

/// Freezes layers [0, first_unfrozen) and unfreezes the rest.
MlpState set_frozen(MlpState state, std::size_t first_unfrozen_layer_index);

/// FNV-1a over every parameter's bytes; used to verify immutability.
std::uint64_t parameter_hash(const MlpState& state);

std::size_t parameter_count(const MlpState& state);

} // namespace cfkd::numcore
