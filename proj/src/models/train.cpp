#include "cfkd/models/train.hpp"

#include "cfkd/numcore/adam.hpp"

#include <algorithm>
#include <numeric>

namespace cfkd::models {

using numcore::MlpState;
using numcore::Tensor2D;

void validate(const TrainConfig& cfg) {
    if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate)) {
        throw ConfigError("learning rate must be finite and non-negative");
    }
    if (cfg.batch_size == 0) {
        throw ConfigError("batch size must be positive");
    }
    if (cfg.max_epochs == 0) {
        throw ConfigError("max epochs must be positive");
    }
    if (!(cfg.validation_fraction > 0.0 && cfg.validation_fraction < 1.0)) {
        throw ConfigError("validation fraction must lie in (0, 1)");
    }
    if (cfg.patience == 0) {
        throw ConfigError("patience must be at least 1");
    }
}

ValidationSplit split_for_validation(std::size_t n, const TrainConfig& cfg) {
    validate(cfg);
    require(n >= 2, "need at least 2 samples to split off a validation set");
    const auto rounded = static_cast<std::size_t>(std::llround(cfg.validation_fraction * static_cast<double>(n)));
    std::size_t n_val = std::max<std::size_t>(n < 10 ? 2 : 1, rounded);
    n_val = std::min(n_val, n - 1);
    numcore::Rng rng = numcore::make_rng({cfg.seed, 0x56414CULL});
    const auto perm = numcore::permutation(n, rng);
    ValidationSplit split;
    split.train.assign(perm.begin(), perm.end() - static_cast<std::ptrdiff_t>(n_val));
    split.validation.assign(perm.end() - static_cast<std::ptrdiff_t>(n_val), perm.end());
    return split;
}

void start_at_constant(MlpState& net, double value) {
    require(!net.layers.empty(), "start_at_constant: empty network");
    auto w = net.layers.back().weight.values();
    std::fill(w.begin(), w.end(), 0.0);
    std::fill(net.layers.back().bias.begin(), net.layers.back().bias.end(), value);
}

double mean_of(std::span<const double> values) {
    require(!values.empty(), "mean of an empty sequence");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

FitHistory train_regressor(MlpState& net, const Tensor2D& x, const Tensor2D& y, const TrainConfig& cfg) {
    require(x.rows() == y.rows(), "train_regressor: feature/label row mismatch");
    require(x.cols() == net.input_dim(), "train_regressor: input width mismatch");
    require(y.cols() == net.output_dim(), "train_regressor: target width mismatch");
    require(!net.fully_frozen(), "train_regressor: every layer is frozen");
    const ValidationSplit split = split_for_validation(x.rows(), cfg);
    const std::size_t first = net.frozen_prefix();
    const Tensor2D cached = first == 0 ? x : numcore::forward_prefix(net, x, first);
    const Tensor2D val_x = select_rows(cached, split.validation);
    const Tensor2D val_y = select_rows(y, split.validation);

    numcore::OptimizerState opt(numcore::AdamConfig{.learning_rate = cfg.learning_rate});
    Tensor2D grad;
    auto step = [&](MlpState& model, std::span<const std::size_t> batch) {
        const Tensor2D bx = select_rows(cached, batch);
        const Tensor2D by = select_rows(y, batch);
        const auto trace = numcore::forward_trace(model, bx, first);
        const double loss = numcore::mse_loss_grad(trace.output, by, &grad);
        const auto grads = numcore::backward_from(model, trace, grad);
        numcore::optimizer_step(model, opt, grads);
        return loss;
    };
    auto val_loss = [&](const MlpState& model) {
        const auto trace = numcore::forward_trace(model, val_x, first);
        return numcore::mse_loss_grad(trace.output, val_y, nullptr);
    };
    return fit_early_stopping(net, split.train, cfg, step, val_loss);
}

} // namespace cfkd::models
