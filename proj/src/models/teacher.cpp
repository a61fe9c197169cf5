#include "cfkd/models/teacher.hpp"

#include <cmath>

namespace cfkd::models {

using numcore::Tensor2D;

std::size_t LowFiModel::hidden_width() const {
    require(net.spec.layer_dims.size() >= 3, "teacher has no hidden layer");
    return net.spec.layer_dims[net.spec.layer_dims.size() - 2];
}

LowFiModel train_low_fidelity(const dataio::FidelityDataset& dataset_l, const numcore::MlpSpec& spec,
                              const TrainConfig& cfg, FitHistory* history) {
    require(!dataset_l.empty(), "train_low_fidelity: empty dataset");
    require(dataset_l.fidelity == dataio::Fidelity::Low, "train_low_fidelity: dataset is not low fidelity");
    dataio::validate(dataset_l);
    numcore::validate(spec);
    require(spec.input_dim() == dataio::kFeatureCount && spec.output_dim() == 1,
            "train_low_fidelity: network must map 14 features to 1 output");
    require(spec.layer_count() >= 2, "train_low_fidelity: teacher needs a hidden layer");

    LowFiModel model;
    model.input_standardizer = dataio::standardize_fit(dataset_l.features);
    model.label_mean = mean_of(dataset_l.labels);
    double ss = 0.0;
    for (double y : dataset_l.labels) {
        ss += (y - model.label_mean) * (y - model.label_mean);
    }
    const double sd = std::sqrt(ss / static_cast<double>(dataset_l.size()));
    model.label_stddev = sd > 1e-12 ? sd : 1.0;

    model.net = numcore::mlp_init(spec);
    start_at_constant(model.net, model.label_mean);
    const Tensor2D x = model.input_standardizer.transform(dataset_l.features);
    FitHistory fit = train_regressor(model.net, x, dataset_l.label_column(), cfg);
    if (history) {
        *history = std::move(fit);
    }
    model.feature_standardizer = dataio::standardize_fit(*numcore::forward(model.net, x, true).last_hidden);
    const std::size_t depth = model.net.layer_count();
    model.net = numcore::set_frozen(std::move(model.net), depth);
    return model;
}

std::vector<double> predict(const LowFiModel& model, const Tensor2D& x_raw) {
    const auto out = numcore::forward(model.net, model.input_standardizer.transform(x_raw));
    return out.predictions.column_values(0);
}

Distilled distill(const LowFiModel& teacher, const Tensor2D& x_raw) {
    auto out = numcore::forward(teacher.net, teacher.input_standardizer.transform(x_raw), true);
    return {out.predictions.column_values(0), std::move(*out.last_hidden)};
}

} // namespace cfkd::models
