#pragma once

#include "cfkd/dataio/dataset.hpp"
#include "cfkd/interpret/icfkd.hpp"
#include "cfkd/models/baselines.hpp"
#include "cfkd/models/cfkd_afn.hpp"
#include "cfkd/models/settings.hpp"

#include <json.hpp>

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace cfkd::harness {

/// Stable ids; the numeric value feeds seed derivation and must never change.
enum class Method {
    Hf = 1,
    Pft = 2,
    Mftlnn = 3,
    Mfdf = 4,
    Cfkd = 5,
    Icfkd = 6,
    CfkdNoTeacherOutput = 7,
    CfkdNoTeacherFeature = 8,
    CfkdNoInput = 9,
};

/// CLI token: hf, pft, mftlnn, mfdf, cfkd, icfkd, cfkd-no-ylh, cfkd-no-yfeature, cfkd-no-x.
std::string method_key(Method m);
Method method_from_key(const std::string& key);
/// Table label: HF, PFT, MF-TLNN, MF-DF, CFKD-AFN, iCFKD-AFN, w/o y_lh, w/o y_feature, w/o x_h.
std::string method_label(Method m);
std::uint64_t method_id(Method m);

/// Whether the method reads the teacher / the autoencoder of the prepared context.
bool uses_teacher(Method m);
bool uses_autoencoder(Method m);

struct TeacherConfig {
    std::vector<std::size_t> hidden;
    numcore::Activation activation = numcore::Activation::ReLU;
    std::size_t batch_size = 32;
    double learning_rate = 0.01;

    friend bool operator==(const TeacherConfig&, const TeacherConfig&) = default;
};

/// Hyperparameters of one high-fidelity method. Fields a method does not use are ignored.
struct MethodConfig {
    Method method = Method::Hf;
    double learning_rate = 0.01;
    std::size_t batch_size = 8;
    /// HF, MF-DF nonlinear branch, CFKD-AFN / iCFKD-AFN predictor.
    std::vector<std::size_t> hidden;
    std::size_t unfrozen = 2;
    std::size_t unfrozen_autoencoder = 2;
    std::size_t aligned_dim = 32;
    double beta = 500.0;
    std::size_t vector_dim = 32;

    friend bool operator==(const MethodConfig&, const MethodConfig&) = default;
};

TeacherConfig reference_teacher(dataio::TreatmentKind treatment);
MethodConfig reference_config(Method method, dataio::TreatmentKind treatment);

nlohmann::json to_json(const TeacherConfig& c);
TeacherConfig teacher_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MethodConfig& c);
/// Missing keys keep the reference values of `fallback`.
MethodConfig method_config_from_json(const nlohmann::json& j, const MethodConfig& fallback);

/// Fresh low-fidelity model trained with the given configuration.
models::LowFiModel train_teacher(const dataio::FidelityDataset& dataset_l, const TeacherConfig& cfg,
                                 std::uint64_t seed);
/// Autoencoder mirroring the teacher widths, so its bottleneck equals the teacher's last hidden width.
models::AutoencoderModel train_teacher_autoencoder(const dataio::FidelityDataset& dataset_l, const TeacherConfig& cfg,
                                                   std::uint64_t seed);

/// Teacher-side state shared by every high-fidelity run.
struct Upstream {
    std::shared_ptr<const models::LowFiModel> teacher;
    std::shared_ptr<const models::AutoencoderModel> autoencoder;
};

using TrainedModel = std::variant<models::HfModel, models::PftModel, models::MftlnnModel, models::MfdfModel,
                                  models::CfkdAfnModel, interpret::IcfkdModel>;

/// Trains `cfg.method` on `dataset_h`. Throws ContractError when a needed
/// upstream model is missing.
TrainedModel train_method(const MethodConfig& cfg, const Upstream& upstream, const dataio::FidelityDataset& dataset_h,
                          std::uint64_t seed);
std::vector<double> predict(const TrainedModel& model, const numcore::Tensor2D& x_raw);

/// Parameter count of the networks a method trains (frozen teacher excluded).
std::size_t trainable_parameter_count(const MethodConfig& cfg, const Upstream& upstream);

nlohmann::json checkpoint_model(const TrainedModel& model);
TrainedModel model_from_checkpoint(const std::string& method_key, const nlohmann::json& model);

} // namespace cfkd::harness
