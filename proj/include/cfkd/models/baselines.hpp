#pragma once

#include "cfkd/dataio/dataset.hpp"
#include "cfkd/dataio/standardizer.hpp"
#include "cfkd/models/teacher.hpp"
#include "cfkd/models/train.hpp"
#include "cfkd/numcore/mlp.hpp"

#include <array>
#include <memory>
#include <span>
#include <vector>

namespace cfkd::models {

// --- HF: high-fidelity data only -------------------------------------------

struct HfModel {
    numcore::MlpState net;
    dataio::Standardizer standardizer;
};

HfModel train_hf(const dataio::FidelityDataset& dataset_h, const numcore::MlpSpec& spec, const TrainConfig& cfg,
                 FitHistory* history = nullptr);
std::vector<double> predict(const HfModel& model, const numcore::Tensor2D& x_raw);

// --- PFT: fine-tune the last layers of a teacher copy ----------------------

struct PftModel {
    LowFiModel tuned;
};

/// Unfreezes the last `unfrozen_layers` layers of a copy of `teacher`.
/// Throws ContractError unless 1 <= unfrozen_layers < teacher depth.
PftModel train_pft(const LowFiModel& teacher, const dataio::FidelityDataset& dataset_h,
                   std::size_t unfrozen_layers, const TrainConfig& cfg, FitHistory* history = nullptr);
std::vector<double> predict(const PftModel& model, const numcore::Tensor2D& x_raw);

// --- Autoencoder over low-fidelity inputs with a label head ----------------

struct AutoencoderSpec {
    /// Encoder hidden widths; the last one is the bottleneck.
    std::vector<std::size_t> encoder_hidden;
    numcore::Activation activation = numcore::Activation::ReLU;
    std::uint64_t init_seed = 0;
};

struct AutoencoderModel {
    numcore::MlpState encoder;  // 14 -> ... -> bottleneck, activated output
    numcore::MlpState decoder;  // bottleneck -> mirrored widths -> 14, linear output
    numcore::MlpState head;     // bottleneck -> 1
    dataio::Standardizer standardizer;

    std::size_t bottleneck() const { return encoder.output_dim(); }
};

/// Minimizes reconstruction MSE of the standardized features plus label MSE, equally weighted.
AutoencoderModel train_autoencoder(const dataio::FidelityDataset& dataset_l, const AutoencoderSpec& spec,
                                   const TrainConfig& cfg, FitHistory* history = nullptr);
/// Mean squared reconstruction error in standardized units.
double reconstruction_mse(const AutoencoderModel& model, const numcore::Tensor2D& x_raw);
/// Label-head prediction.
std::vector<double> predict(const AutoencoderModel& model, const numcore::Tensor2D& x_raw);
/// Encoder followed by the label head as one network.
numcore::MlpState stack_regressor(const numcore::MlpState& encoder, const numcore::MlpState& head);

// --- MF-TLNN: fine-tuned teacher and autoencoder, convex combination -------

struct MftlnnModel {
    LowFiModel teacher_tuned;
    numcore::MlpState ae_regressor;
    dataio::Standardizer ae_standardizer;
    std::array<double, 2> combiner_logits{0.0, 0.0};

    /// Softmax of the combiner logits: weights on (teacher, autoencoder).
    std::array<double, 2> weights() const;
};

/// Logits of a two-way softmax minimizing MSE of w0*first + w1*second against
/// `labels`, fitted by full-batch Adam.
std::array<double, 2> fit_combiner(std::span<const double> first, std::span<const double> second,
                                   std::span<const double> labels, std::size_t steps = 500,
                                   double learning_rate = 0.05);

MftlnnModel train_mftlnn(const LowFiModel& teacher, const AutoencoderModel& autoencoder,
                         const dataio::FidelityDataset& dataset_h, std::size_t unfrozen_teacher,
                         std::size_t unfrozen_autoencoder, const TrainConfig& cfg);
std::vector<double> predict(const MftlnnModel& model, const numcore::Tensor2D& x_raw);

// --- MF-DF: teacher prediction concatenated with the inputs ----------------

struct MfdfModel {
    /// Also supplies the input standardization.
    std::shared_ptr<const LowFiModel> teacher;
    numcore::MlpState linear;     // 15 -> 1, no activation
    numcore::MlpState nonlinear;  // 15 -> hidden -> 1
    double mix_logit = 0.0;

    /// Weight of the nonlinear branch.
    double lambda() const;
};

struct MfdfBranches {
    std::vector<double> linear;
    std::vector<double> nonlinear;
};

/// Hidden widths of the nonlinear branch are `nonlinear_hidden`.
MfdfModel train_mfdf(std::shared_ptr<const LowFiModel> teacher, const dataio::FidelityDataset& dataset_h,
                     const std::vector<std::size_t>& nonlinear_hidden, const TrainConfig& cfg,
                     FitHistory* history = nullptr);
/// concat(standardized x, rescaled teacher prediction), 15 columns.
numcore::Tensor2D mfdf_inputs(const MfdfModel& model, const numcore::Tensor2D& x_raw);
MfdfBranches mfdf_branches(const MfdfModel& model, const numcore::Tensor2D& x_raw);
std::vector<double> predict(const MfdfModel& model, const numcore::Tensor2D& x_raw);

} // namespace cfkd::models
