#pragma once

// Synthetic fidelity pairs for model tests: a smooth high-fidelity map and a
// biased low-fidelity version of it over uniform features in [-1, 1].

#include "cfkd/dataio/dataset.hpp"
#include "cfkd/models/settings.hpp"
#include "cfkd/models/teacher.hpp"
#include "cfkd/numcore/random.hpp"

#include <map>
#include <memory>

namespace cfkd::testing {

inline double true_map(std::span<const double> x) {
    return 5.0 + 2.0 * x[0] - x[3] + 0.5 * x[1] * x[2] + 0.3 * x[7];
}

inline numcore::Tensor2D random_features(std::size_t n, std::uint64_t seed) {
    auto rng = numcore::make_rng({seed, 0xFEA7});
    numcore::Tensor2D x(n, dataio::kFeatureCount);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < dataio::kFeatureCount; ++j) {
            x(i, j) = numcore::draw_uniform01(rng) * 2.0 - 1.0;
        }
    }
    return x;
}

inline dataio::FidelityDataset make_dataset(std::size_t n, dataio::Fidelity f, std::uint64_t seed) {
    dataio::FidelityDataset ds;
    ds.features = random_features(n, seed);
    ds.fidelity = f;
    ds.treatment = dataio::TreatmentKind::DeclineReduction;
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = ds.features.row(i);
        const double y = true_map(x);
        ds.labels.push_back(f == dataio::Fidelity::High ? y : y + 0.4 + 0.3 * x[5]);
    }
    return ds;
}

inline models::TrainConfig quick_config(std::uint64_t seed, std::size_t batch = 16) {
    models::TrainConfig cfg;
    cfg.learning_rate = 0.01;
    cfg.batch_size = batch;
    cfg.max_epochs = 300;
    cfg.patience = 30;
    cfg.seed = seed;
    return cfg;
}

/// Teacher [14, 32, 16, 16, 1] trained on 1500 low-fidelity rows; cached per seed.
inline std::shared_ptr<const models::LowFiModel> small_teacher(std::uint64_t seed = 1) {
    static std::map<std::uint64_t, std::shared_ptr<const models::LowFiModel>> cache;
    auto& slot = cache[seed];
    if (!slot) {
        const auto lf = make_dataset(1500, dataio::Fidelity::Low, 100 + seed);
        slot = std::make_shared<const models::LowFiModel>(models::train_low_fidelity(
            lf, models::regressor_spec({32, 16, 16}, numcore::Activation::LeakyReLU, seed), quick_config(seed, 32)));
    }
    return slot;
}

} // namespace cfkd::testing
