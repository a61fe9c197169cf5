#include "cfkd/numcore/adam.hpp"

#include "cfkd/errors.hpp"

#include <cmath>

namespace cfkd::numcore {

void OptimizerState::step(std::span<const ParamSlot> slots) {
    if (first_moment_.empty()) {
        first_moment_.resize(slots.size());
        second_moment_.resize(slots.size());
        for (std::size_t i = 0; i < slots.size(); ++i) {
            first_moment_[i].assign(slots[i].value.size(), 0.0);
            second_moment_[i].assign(slots[i].value.size(), 0.0);
        }
    }
    require(first_moment_.size() == slots.size(), "OptimizerState: parameter block count changed");
    ++step_;
    const double t = static_cast<double>(step_);
    const double bias1 = 1.0 - std::pow(config_.beta1, t);
    const double bias2 = 1.0 - std::pow(config_.beta2, t);
    for (std::size_t s = 0; s < slots.size(); ++s) {
        const ParamSlot& slot = slots[s];
        require(slot.value.size() == slot.grad.size() && slot.value.size() == first_moment_[s].size(),
                "OptimizerState: parameter/gradient/moment shape mismatch");
        if (slot.frozen) {
            continue;
        }
        auto& m = first_moment_[s];
        auto& v = second_moment_[s];
        for (std::size_t i = 0; i < slot.value.size(); ++i) {
            const double g = slot.grad[i];
            m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
            v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
            const double m_hat = m[i] / bias1;
            const double v_hat = v[i] / bias2;
            slot.value[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
        }
    }
}

void append_slots(MlpState& state, const GradientSet& grads, std::vector<ParamSlot>& slots) {
    require(grads.layers.size() == state.layers.size(), "append_slots: gradient layer count mismatch");
    for (std::size_t l = 0; l < state.layers.size(); ++l) {
        DenseLayer& layer = state.layers[l];
        slots.push_back({layer.weight.values(), grads.layers[l].weight.values(), layer.frozen});
        slots.push_back({layer.bias, grads.layers[l].bias, layer.frozen});
    }
}

void optimizer_step(MlpState& state, OptimizerState& opt, const GradientSet& grads) {
    std::vector<ParamSlot> slots;
    append_slots(state, grads, slots);
    opt.step(slots);
}

} // namespace cfkd::numcore
