#pragma once

#include "cfkd/dataio/dataset.hpp"
#include "cfkd/interpret/mutual_info.hpp"
#include "cfkd/models/fusion.hpp"
#include "cfkd/models/teacher.hpp"
#include "cfkd/models/train.hpp"

#include <json.hpp>

#include <array>
#include <memory>
#include <vector>

namespace cfkd::interpret {

struct IcfkdSpec {
    /// Hidden widths of the shared trunk; must be nonempty.
    std::vector<std::size_t> predictor_hidden{32, 16, 16};
    std::size_t aligned_dim = 32;
    double beta = 500.0;
    std::size_t vector_dim = 32;
    std::size_t critic_steps = 5;
    double critic_lr = 1e-3;
    /// Training rows sampled at each step for the MI term (all of them when
    /// fewer). The MSE term uses the minibatch.
    std::size_t mi_batch_size = 64;
};

/// Throws ConfigError unless beta is in {0, 100, 500, 1000} and the vector
/// width in {8, 16, 32}. Beta 0 is accepted for the MI-free ablation.
void validate(const IcfkdSpec& spec);

/// Fusion front end and trunk as in CFKD-AFN, then two linear heads giving
/// vec1 and vec2 and a linear prediction head over concat(vec1, vec2).
struct IcfkdModel {
    std::shared_ptr<const models::LowFiModel> teacher;
    models::FusionLayer fusion;
    numcore::MlpState trunk;                     // fused -> last hidden, activated output
    std::array<numcore::MlpState, 2> vec_heads;  // last hidden -> d
    numcore::MlpState head;                      // 2d -> 1
    double beta = 0.0;

    std::size_t vector_dim() const { return vec_heads[0].output_dim(); }
};

/// Untrained model as train_icfkd starts it for the same spec and seed.
IcfkdModel icfkd_init(std::shared_ptr<const models::LowFiModel> teacher, const IcfkdSpec& spec, double label_mean,
                      std::uint64_t seed);

struct IcfkdTrainStats {
    models::FitHistory history;
    /// Minibatch DV bound seen by each main step.
    std::vector<double> batch_mi;
};

/// Alternates `critic_steps` critic ascent steps with one descent step on
/// MSE(minibatch) + beta * max(DV(vec1, vec2), 0) over an MI sample of
/// `mi_batch_size` training rows. Early stopping watches MSE only.
IcfkdModel train_icfkd(std::shared_ptr<const models::LowFiModel> teacher, const dataio::FidelityDataset& dataset_h,
                       const IcfkdSpec& spec, const models::TrainConfig& cfg, IcfkdTrainStats* stats = nullptr);

std::vector<double> predict(const IcfkdModel& model, const numcore::Tensor2D& x_raw);

struct DecoupledVectors {
    numcore::Tensor2D vec1;
    numcore::Tensor2D vec2;
};

DecoupledVectors decoupled_vectors(const IcfkdModel& model, const numcore::Tensor2D& x_raw);

/// DV estimate of MI(vec1, vec2) on the given inputs with a freshly trained critic.
double vector_mutual_information(const IcfkdModel& model, const numcore::Tensor2D& x_raw, std::size_t critic_steps,
                                 std::uint64_t seed);

nlohmann::json to_json(const IcfkdModel& model);
IcfkdModel icfkd_from_json(const nlohmann::json& j);

} // namespace cfkd::interpret
