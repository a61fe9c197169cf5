#include "cfkd/models/cfkd_afn.hpp"

#include "cfkd/numcore/adam.hpp"

namespace cfkd::models {

using numcore::Tensor2D;

CfkdAfnModel train_cfkd(std::shared_ptr<const LowFiModel> teacher, const dataio::FidelityDataset& dataset_h,
                        const CfkdSpec& spec, const TrainConfig& cfg, FitHistory* history,
                        const CfkdObserver& observer) {
    require(teacher != nullptr, "train_cfkd: missing teacher");
    require(dataset_h.fidelity == dataio::Fidelity::High, "train_cfkd: dataset is not high fidelity");
    dataio::validate(dataset_h);
    require(dataset_h.size() >= 2, "train_cfkd: need at least 2 high-fidelity samples");
    require(teacher->net.fully_frozen(), "train_cfkd: teacher must be frozen");

    CfkdAfnModel model;
    model.teacher = teacher;
    model.fusion = fusion_init(teacher->hidden_width(), spec.aligned_dim, spec.channels,
                               numcore::derive_seed({cfg.seed, 0x46555345ULL}));
    std::vector<std::size_t> dims{model.fusion.fused_dim()};
    dims.insert(dims.end(), spec.predictor_hidden.begin(), spec.predictor_hidden.end());
    dims.push_back(1);
    model.predictor =
        numcore::mlp_init({dims, spec.activation, numcore::derive_seed({cfg.seed, 0x50524544ULL}), false});

    const ChannelInputs inputs = channel_inputs(*teacher, dataset_h.features);
    const Tensor2D y = dataset_h.label_column();
    const ValidationSplit split = split_for_validation(dataset_h.size(), cfg);
    start_at_constant(model.predictor, mean_of(dataset_h.labels));
    const ChannelInputs val_in = inputs.select(split.validation);
    const Tensor2D val_y = select_rows(y, split.validation);

    numcore::OptimizerState opt(numcore::AdamConfig{.learning_rate = cfg.learning_rate});
    std::size_t steps = 0;
    auto step = [&](CfkdAfnModel& m, std::span<const std::size_t> batch) {
        const ChannelInputs bin = inputs.select(batch);
        const Tensor2D by = select_rows(y, batch);
        FusionTrace ftrace;
        const Tensor2D fused = fuse(m.fusion, bin, &ftrace);
        const auto ptrace = numcore::forward_trace(m.predictor, fused);
        Tensor2D g_out;
        const double loss = numcore::mse_loss_grad(ptrace.output, by, &g_out);
        Tensor2D g_fused;
        const auto pgrads = numcore::backward_from(m.predictor, ptrace, g_out, &g_fused);
        const auto fgrads = fuse_backward(m.fusion, bin, ftrace, g_fused);
        std::vector<numcore::ParamSlot> slots;
        numcore::append_slots(m.predictor, pgrads, slots);
        append_slots(m.fusion, fgrads, slots);
        opt.step(slots);
        ++steps;
        if (observer) {
            observer(m, steps);
        }
        return loss;
    };
    auto val_loss = [&](const CfkdAfnModel& m) {
        const auto out = numcore::forward(m.predictor, fuse(m.fusion, val_in));
        return numcore::mse_loss_grad(out.predictions, val_y, nullptr);
    };
    FitHistory fit = fit_early_stopping(model, split.train, cfg, step, val_loss);
    if (history) {
        *history = std::move(fit);
    }
    return model;
}

std::vector<double> predict(const CfkdAfnModel& model, const Tensor2D& x_raw) {
    const ChannelInputs in = channel_inputs(*model.teacher, x_raw);
    return numcore::forward(model.predictor, fuse(model.fusion, in)).predictions.column_values(0);
}

} // namespace cfkd::models
