#pragma once

#include "cfkd/dataio/dataset.hpp"
#include "cfkd/dataio/standardizer.hpp"
#include "cfkd/models/fusion.hpp"
#include "cfkd/models/teacher.hpp"
#include "cfkd/models/train.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace cfkd::models {

struct CfkdSpec {
    std::vector<std::size_t> predictor_hidden{32, 16, 16};
    std::size_t aligned_dim = 32;
    numcore::Activation activation = numcore::Activation::ReLU;
    ChannelMask channels;
};

/// Student over the frozen teacher. The teacher is shared and never written.
struct CfkdAfnModel {
    /// Also supplies the input standardization for the feature channel.
    std::shared_ptr<const LowFiModel> teacher;
    FusionLayer fusion;
    numcore::MlpState predictor;

    std::size_t aligned_dim() const { return fusion.aligned_dim; }
    std::size_t fused_dim() const { return fusion.fused_dim(); }
};

/// Called after every optimizer step with the current model and step count.
using CfkdObserver = std::function<void(const CfkdAfnModel&, std::size_t)>;

CfkdAfnModel train_cfkd(std::shared_ptr<const LowFiModel> teacher, const dataio::FidelityDataset& dataset_h,
                        const CfkdSpec& spec, const TrainConfig& cfg, FitHistory* history = nullptr,
                        const CfkdObserver& observer = {});

/// distill -> fuse -> predictor.
std::vector<double> predict(const CfkdAfnModel& model, const numcore::Tensor2D& x_raw);

} // namespace cfkd::models
