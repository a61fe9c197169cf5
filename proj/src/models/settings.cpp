#include "cfkd/models/settings.hpp"

#include "cfkd/errors.hpp"

namespace cfkd::models {

using numcore::Activation;

ReferenceSettings reference_settings(dataio::TreatmentKind treatment) {
    ReferenceSettings s;
    s.hf_hidden = {32, 16, 16, 16, 16, 16};
    switch (treatment) {
    case dataio::TreatmentKind::DeclineReduction:
        s.teacher_hidden = {256, 128, 64, 32, 16, 16, 16};
        s.teacher_activation = Activation::LeakyReLU;
        s.teacher_batch = 32;
        s.pft_unfrozen = 2;
        s.mftlnn_teacher_unfrozen = 2;
        s.mftlnn_autoencoder_unfrozen = 2;
        s.mfdf_hidden = {128, 64, 32, 16};
        s.cfkd_hidden = {32, 16, 16};
        s.cfkd_aligned_dim = 32;
        break;
    case dataio::TreatmentKind::ExacerbationDelay:
        s.teacher_hidden = {128, 64, 32, 16, 16, 16};
        s.teacher_activation = Activation::LeakyReLU;
        s.teacher_batch = 32;
        s.pft_unfrozen = 2;
        s.mftlnn_teacher_unfrozen = 1;
        s.mftlnn_autoencoder_unfrozen = 2;
        s.mfdf_hidden = {128, 64};
        s.cfkd_hidden = {32, 16, 16, 16, 16};
        s.cfkd_aligned_dim = 32;
        break;
    case dataio::TreatmentKind::ActivityBoost:
        s.teacher_hidden = {128, 64, 32, 16, 16};
        s.teacher_activation = Activation::ReLU;
        s.teacher_batch = 16;
        s.pft_unfrozen = 2;
        s.mftlnn_teacher_unfrozen = 1;
        s.mftlnn_autoencoder_unfrozen = 1;
        s.mfdf_hidden = {256, 128};
        s.cfkd_hidden = {64, 32, 16, 16, 16};
        s.cfkd_aligned_dim = 16;
        break;
    case dataio::TreatmentKind::SymptomRelief:
        s.teacher_hidden = {128, 64, 32, 16, 16, 16};
        s.teacher_activation = Activation::LeakyReLU;
        s.teacher_batch = 32;
        s.pft_unfrozen = 1;
        s.mftlnn_teacher_unfrozen = 1;
        s.mftlnn_autoencoder_unfrozen = 1;
        s.mfdf_hidden = {256, 128};
        s.cfkd_hidden = {64, 32, 16, 16, 16, 16};
        s.cfkd_aligned_dim = 16;
        break;
    case dataio::TreatmentKind::None:
        throw ContractError("no tuned settings for the untreated arm");
    }
    return s;
}

numcore::MlpSpec regressor_spec(const std::vector<std::size_t>& hidden, Activation activation, std::uint64_t seed) {
    std::vector<std::size_t> dims{dataio::kFeatureCount};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(1);
    return {dims, activation, seed, false};
}

TrainConfig teacher_train_config(const ReferenceSettings& s, std::uint64_t seed) {
    TrainConfig cfg;
    cfg.learning_rate = s.teacher_lr;
    cfg.batch_size = s.teacher_batch;
    cfg.seed = seed;
    return cfg;
}

TrainConfig hf_train_config(const ReferenceSettings& s, std::uint64_t seed) {
    TrainConfig cfg;
    cfg.learning_rate = s.hf_lr;
    cfg.batch_size = s.hf_batch;
    cfg.seed = seed;
    return cfg;
}

} // namespace cfkd::models
