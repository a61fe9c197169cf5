#pragma once

#include "cfkd/dataio/dataset.hpp"
#include "cfkd/models/train.hpp"
#include "cfkd/numcore/mlp.hpp"

#include <cstddef>
#include <vector>

namespace cfkd::models {

/// Tuned hyperparameters for one treatment: the teacher row and the
/// high-fidelity method rows. High-fidelity methods share lr 0.01, batch 8, ReLU.
struct ReferenceSettings {
    std::vector<std::size_t> teacher_hidden;
    numcore::Activation teacher_activation = numcore::Activation::ReLU;
    double teacher_lr = 0.01;
    std::size_t teacher_batch = 32;

    double hf_lr = 0.01;
    std::size_t hf_batch = 8;

    std::vector<std::size_t> hf_hidden;
    std::size_t pft_unfrozen = 2;
    std::size_t mftlnn_teacher_unfrozen = 2;
    std::size_t mftlnn_autoencoder_unfrozen = 2;
    std::vector<std::size_t> mfdf_hidden;
    std::vector<std::size_t> cfkd_hidden;
    std::size_t cfkd_aligned_dim = 32;

    double icfkd_beta = 500.0;
    std::size_t icfkd_dim = 32;
};

/// Settings for treatments 1..4; throws ContractError for None.
ReferenceSettings reference_settings(dataio::TreatmentKind treatment);

/// [14, hidden..., 1] with the given activation.
numcore::MlpSpec regressor_spec(const std::vector<std::size_t>& hidden, numcore::Activation activation,
                                std::uint64_t seed);

TrainConfig teacher_train_config(const ReferenceSettings& s, std::uint64_t seed);
TrainConfig hf_train_config(const ReferenceSettings& s, std::uint64_t seed);

} // namespace cfkd::models
