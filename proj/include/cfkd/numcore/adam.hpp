#pragma once

#include "cfkd/numcore/mlp.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace cfkd::numcore {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// One parameter block and its gradient. Frozen blocks are skipped entirely.
struct ParamSlot {
    std::span<double> value;
    std::span<const double> grad;
    bool frozen = false;
};

/// Adaptive-moment state. Moment buffers are sized on the first step and must
/// keep the same block layout afterwards.
class OptimizerState {
public:
    OptimizerState() = default;
    explicit OptimizerState(AdamConfig config) : config_(config) {}

    const AdamConfig& config() const { return config_; }
    void set_learning_rate(double lr) { config_.learning_rate = lr; }
    std::uint64_t step_count() const { return step_; }

    void step(std::span<const ParamSlot> slots);

private:
    AdamConfig config_;
    std::uint64_t step_ = 0;
    std::vector<std::vector<double>> first_moment_;
    std::vector<std::vector<double>> second_moment_;
};

/// Appends one slot per weight matrix and bias vector of `state`.
void append_slots(MlpState& state, const GradientSet& grads, std::vector<ParamSlot>& slots);

/// Adam update of every unfrozen layer of `state`.
void optimizer_step(MlpState& state, OptimizerState& opt, const GradientSet& grads);

} // namespace cfkd::numcore
