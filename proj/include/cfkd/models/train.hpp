#pragma once

#include "cfkd/errors.hpp"
#include "cfkd/numcore/mlp.hpp"
#include "cfkd/numcore/random.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace cfkd::models {

struct TrainConfig {
    double learning_rate = 0.01;
    std::size_t batch_size = 8;
    std::size_t max_epochs = 2000;
    double validation_fraction = 0.2;
    std::size_t patience = 50;
    std::uint64_t seed = 0;
};

void validate(const TrainConfig& cfg);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double validation_loss = 0.0;
};

struct FitHistory {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    double best_validation_loss = std::numeric_limits<double>::infinity();
    std::size_t steps = 0;
};

struct ValidationSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

/// Shuffles 0..n-1 and holds out the last-drawn fraction for validation. Below
/// ten samples at least two are held out (one when n == 2). Needs n >= 2.
ValidationSplit split_for_validation(std::size_t n, const TrainConfig& cfg);

/// Minibatch training with early stopping. `step(model, batch)` performs one
/// optimizer update on the given training indices and returns the batch loss;
/// `validate(model)` returns the validation loss. On return `model` holds the
/// parameters from the epoch with the lowest validation loss.
template <class Model, class StepFn, class ValidateFn>
FitHistory fit_early_stopping(Model& model, std::span<const std::size_t> train_indices, const TrainConfig& cfg,
                              StepFn&& step, ValidateFn&& validate_loss) {
    require(!train_indices.empty(), "fit: empty training set");
    FitHistory history;
    numcore::Rng rng = numcore::make_rng({cfg.seed, 0x45504F43ULL});
    Model best = model;
    std::vector<std::size_t> order(train_indices.begin(), train_indices.end());
    std::vector<std::size_t> batch;
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto perm = numcore::permutation(order.size(), rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < perm.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(perm.size(), start + cfg.batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) {
                batch.push_back(order[perm[i]]);
            }
            const double loss = step(model, std::span<const std::size_t>(batch));
            if (!std::isfinite(loss)) {
                throw NumericError("training diverged: non-finite batch loss at epoch " + std::to_string(epoch));
            }
            loss_sum += loss * static_cast<double>(batch.size());
            ++history.steps;
        }
        const double val = validate_loss(static_cast<const Model&>(model));
        history.epochs.push_back({epoch, loss_sum / static_cast<double>(order.size()), val});
        if (val < history.best_validation_loss) {
            history.best_validation_loss = val;
            history.best_epoch = epoch;
            best = model;
        } else if (epoch - history.best_epoch >= cfg.patience) {
            break;
        }
    }
    model = std::move(best);
    return history;
}

/// Trains `net` on (x, y) by MSE with Adam and early stopping, splitting off
/// a validation set per `cfg`. A frozen layer prefix is evaluated once and
/// cached. Throws ContractError if every layer is frozen.
FitHistory train_regressor(numcore::MlpState& net, const numcore::Tensor2D& x, const numcore::Tensor2D& y,
                           const TrainConfig& cfg);

/// Zeroes the output-layer weights and sets its bias to `value`, so a freshly
/// initialised regressor starts as the constant predictor `value`.
void start_at_constant(numcore::MlpState& net, double value);

double mean_of(std::span<const double> values);

} // namespace cfkd::models
