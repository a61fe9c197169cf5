#pragma once

#include "cfkd/dataio/dataset.hpp"
#include "cfkd/dataio/standardizer.hpp"
#include "cfkd/models/train.hpp"
#include "cfkd/numcore/mlp.hpp"

#include <vector>

namespace cfkd::models {

/// Network trained on low-fidelity data. All layers are frozen once training
/// returns; fine-tuning methods work on copies.
struct LowFiModel {
    numcore::MlpState net;
    dataio::Standardizer input_standardizer;
    /// Low-fidelity label mean and standard deviation, used by students to
    /// rescale the teacher's prediction before it enters a learned layer.
    double label_mean = 0.0;
    double label_stddev = 1.0;
    /// Per-unit statistics of the last hidden layer over the low-fidelity
    /// training inputs; students standardize the microscopic channel with them.
    dataio::Standardizer feature_standardizer;

    /// Width of the last hidden layer.
    std::size_t hidden_width() const;

    friend bool operator==(const LowFiModel&, const LowFiModel&) = default;
};

LowFiModel train_low_fidelity(const dataio::FidelityDataset& dataset_l, const numcore::MlpSpec& spec,
                              const TrainConfig& cfg, FitHistory* history = nullptr);

/// Teacher prediction on raw features.
std::vector<double> predict(const LowFiModel& model, const numcore::Tensor2D& x_raw);

struct Distilled {
    std::vector<double> y_lh;
    numcore::Tensor2D y_feature;
};

/// Macroscopic (output) and microscopic (last hidden layer) channels of the
/// teacher evaluated on raw high-fidelity features.
Distilled distill(const LowFiModel& teacher, const numcore::Tensor2D& x_raw);

} // namespace cfkd::models
