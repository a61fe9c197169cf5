#pragma once

#include "cfkd/dataio/standardizer.hpp"
#include "cfkd/models/teacher.hpp"
#include "cfkd/numcore/adam.hpp"
#include "cfkd/numcore/mlp.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cfkd::models {

/// The three fusion inputs: teacher prediction, teacher last hidden layer, and
/// the standardized high-fidelity features.
enum class Channel { TeacherOutput = 0, TeacherFeature = 1, Input = 2 };

inline constexpr std::size_t kChannelCount = 3;

struct ChannelMask {
    std::array<bool, kChannelCount> active{true, true, true};

    std::size_t count() const;
    bool has(Channel c) const { return active[static_cast<std::size_t>(c)]; }
    /// Full mask with one channel removed.
    static ChannelMask without(Channel c);

    friend bool operator==(const ChannelMask&, const ChannelMask&) = default;
};

/// Per-sample values of the three channels. `teacher_output` is the teacher's
/// prediction rescaled by its low-fidelity label statistics (b x 1) and
/// `teacher_feature` its last hidden layer standardized per unit.
struct ChannelInputs {
    numcore::Tensor2D teacher_output;
    numcore::Tensor2D teacher_feature;
    numcore::Tensor2D input;

    std::size_t rows() const { return input.rows(); }
    ChannelInputs select(std::span<const std::size_t> indices) const;
    const numcore::Tensor2D& of(Channel c) const;
    numcore::Tensor2D& of(Channel c);
};

/// Inputs from distilled channels and already-standardized features.
ChannelInputs channel_inputs(const LowFiModel& teacher, const Distilled& distilled, const numcore::Tensor2D& x_std);
/// Distills raw features through the teacher; the feature channel uses the
/// teacher's input standardization.
ChannelInputs channel_inputs(const LowFiModel& teacher, const numcore::Tensor2D& x_raw);

/// Numerically stable softmax.
std::vector<double> attention_weights(std::span<const double> logits);

/// Per-channel linear alignment to `aligned_dim` plus softmax attention over
/// the active channels. Inactive channels hold an empty transform.
struct FusionLayer {
    std::array<numcore::MlpState, kChannelCount> transforms;
    std::vector<double> logits;
    ChannelMask mask;
    std::size_t aligned_dim = 0;

    std::size_t fused_dim() const { return mask.count() * aligned_dim; }
    std::vector<double> attention() const { return attention_weights(logits); }

    friend bool operator==(const FusionLayer&, const FusionLayer&) = default;
};

/// Transforms get He-initialised weights; logits start at zero (uniform attention).
FusionLayer fusion_init(std::size_t teacher_hidden_width, std::size_t aligned_dim, ChannelMask mask,
                        std::uint64_t seed);

struct FusionTrace {
    std::vector<double> alpha;
    /// Aligned (unscaled) output per active channel, in channel order.
    std::vector<numcore::Tensor2D> aligned;
};

/// Concatenation of the attention-scaled aligned channels (b x fused_dim).
numcore::Tensor2D fuse(const FusionLayer& layer, const ChannelInputs& in, FusionTrace* trace = nullptr);

struct FusionGradient {
    std::array<numcore::GradientSet, kChannelCount> transforms;
    std::vector<double> logits;
};

/// Backward pass from dLoss/dFused. When `input_grads` is non-null it
/// receives dLoss/d(channel input) for every active channel.
FusionGradient fuse_backward(const FusionLayer& layer, const ChannelInputs& in, const FusionTrace& trace,
                             const numcore::Tensor2D& fused_grad, ChannelInputs* input_grads = nullptr);

void append_slots(FusionLayer& layer, const FusionGradient& grads, std::vector<numcore::ParamSlot>& slots);

} // namespace cfkd::models
