#include "cfkd/models/fusion.hpp"

#include <algorithm>
#include <cmath>

namespace cfkd::models {

using numcore::Tensor2D;

std::size_t ChannelMask::count() const {
    return static_cast<std::size_t>(std::count(active.begin(), active.end(), true));
}

ChannelMask ChannelMask::without(Channel c) {
    ChannelMask m;
    m.active[static_cast<std::size_t>(c)] = false;
    return m;
}

ChannelInputs ChannelInputs::select(std::span<const std::size_t> indices) const {
    return {select_rows(teacher_output, indices), select_rows(teacher_feature, indices), select_rows(input, indices)};
}

const Tensor2D& ChannelInputs::of(Channel c) const {
    switch (c) {
    case Channel::TeacherOutput:
        return teacher_output;
    case Channel::TeacherFeature:
        return teacher_feature;
    case Channel::Input:
        break;
    }
    return input;
}

Tensor2D& ChannelInputs::of(Channel c) {
    return const_cast<Tensor2D&>(static_cast<const ChannelInputs&>(*this).of(c));
}

ChannelInputs channel_inputs(const LowFiModel& teacher, const Distilled& distilled, const Tensor2D& x_std) {
    require(distilled.y_lh.size() == x_std.rows() && distilled.y_feature.rows() == x_std.rows(),
            "channel inputs: row count mismatch");
    require(x_std.cols() == dataio::kFeatureCount, "channel inputs: expected 14 features");
    ChannelInputs in;
    in.teacher_output = Tensor2D(x_std.rows(), 1);
    for (std::size_t i = 0; i < x_std.rows(); ++i) {
        in.teacher_output(i, 0) = (distilled.y_lh[i] - teacher.label_mean) / teacher.label_stddev;
    }
    in.teacher_feature = teacher.feature_standardizer.transform(distilled.y_feature);
    in.input = x_std;
    return in;
}

ChannelInputs channel_inputs(const LowFiModel& teacher, const Tensor2D& x_raw) {
    return channel_inputs(teacher, distill(teacher, x_raw), teacher.input_standardizer.transform(x_raw));
}

std::vector<double> attention_weights(std::span<const double> logits) {
    require(!logits.empty(), "softmax of an empty vector");
    const double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - top);
        total += out[i];
    }
    for (double& v : out) {
        v /= total;
    }
    return out;
}

FusionLayer fusion_init(std::size_t teacher_hidden_width, std::size_t aligned_dim, ChannelMask mask,
                        std::uint64_t seed) {
    if (aligned_dim == 0) {
        throw ConfigError("aligned dimension must be positive");
    }
    if (mask.count() < 1) {
        throw ConfigError("fusion needs at least one active channel");
    }
    const std::array<std::size_t, kChannelCount> widths{1, teacher_hidden_width, dataio::kFeatureCount};
    FusionLayer layer;
    layer.mask = mask;
    layer.aligned_dim = aligned_dim;
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        if (!mask.active[c]) {
            continue;
        }
        numcore::MlpSpec spec{{widths[c], aligned_dim}, numcore::Activation::Identity,
                              numcore::derive_seed({seed, c}), false};
        layer.transforms[c] = numcore::mlp_init(spec);
    }
    layer.logits.assign(mask.count(), 0.0);
    return layer;
}

Tensor2D fuse(const FusionLayer& layer, const ChannelInputs& in, FusionTrace* trace) {
    const std::vector<double> alpha = layer.attention();
    const std::size_t b = in.rows();
    const std::size_t dim = layer.aligned_dim;
    Tensor2D fused(b, layer.fused_dim());
    if (trace) {
        trace->alpha = alpha;
        trace->aligned.clear();
    }
    std::size_t slot = 0;
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        if (!layer.mask.active[c]) {
            continue;
        }
        const Tensor2D& src = in.of(static_cast<Channel>(c));
        require(src.cols() == layer.transforms[c].input_dim() && src.rows() == b,
                "fuse: channel " + std::to_string(c) + " has the wrong shape");
        Tensor2D aligned = numcore::forward(layer.transforms[c], src).predictions;
        for (std::size_t i = 0; i < b; ++i) {
            for (std::size_t j = 0; j < dim; ++j) {
                fused(i, slot * dim + j) = alpha[slot] * aligned(i, j);
            }
        }
        if (trace) {
            trace->aligned.push_back(std::move(aligned));
        }
        ++slot;
    }
    return fused;
}

FusionGradient fuse_backward(const FusionLayer& layer, const ChannelInputs& in, const FusionTrace& trace,
                             const Tensor2D& fused_grad, ChannelInputs* input_grads) {
    const std::size_t b = in.rows();
    const std::size_t dim = layer.aligned_dim;
    const std::size_t active = layer.mask.count();
    require(fused_grad.rows() == b && fused_grad.cols() == layer.fused_dim(), "fuse_backward: gradient shape");
    require(trace.aligned.size() == active && trace.alpha.size() == active, "fuse_backward: trace mismatch");

    FusionGradient out;
    std::vector<double> d_alpha(active, 0.0);
    std::size_t slot = 0;
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        if (!layer.mask.active[c]) {
            continue;
        }
        const Tensor2D& aligned = trace.aligned[slot];
        Tensor2D g_aligned(b, dim);
        for (std::size_t i = 0; i < b; ++i) {
            for (std::size_t j = 0; j < dim; ++j) {
                const double g = fused_grad(i, slot * dim + j);
                d_alpha[slot] += g * aligned(i, j);
                g_aligned(i, j) = trace.alpha[slot] * g;
            }
        }
        const Channel channel = static_cast<Channel>(c);
        const auto t = numcore::forward_trace(layer.transforms[c], in.of(channel));
        if (input_grads) {
            out.transforms[c] = numcore::backward_from(layer.transforms[c], t, g_aligned, &input_grads->of(channel));
        } else {
            out.transforms[c] = numcore::backward_from(layer.transforms[c], t, g_aligned);
        }
        ++slot;
    }
    double weighted = 0.0;
    for (std::size_t s = 0; s < active; ++s) {
        weighted += trace.alpha[s] * d_alpha[s];
    }
    out.logits.resize(active);
    for (std::size_t s = 0; s < active; ++s) {
        out.logits[s] = trace.alpha[s] * (d_alpha[s] - weighted);
    }
    return out;
}

void append_slots(FusionLayer& layer, const FusionGradient& grads, std::vector<numcore::ParamSlot>& slots) {
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        if (layer.mask.active[c]) {
            numcore::append_slots(layer.transforms[c], grads.transforms[c], slots);
        }
    }
    slots.push_back({layer.logits, grads.logits, false});
}

} // namespace cfkd::models
