#include "cfkd/models/baselines.hpp"

#include "cfkd/models/fusion.hpp"
#include "cfkd/numcore/adam.hpp"

#include <cmath>

namespace cfkd::models {

using numcore::MlpState;
using numcore::Tensor2D;

namespace {

void require_high(const dataio::FidelityDataset& ds, const char* who) {
    require(ds.fidelity == dataio::Fidelity::High, std::string(who) + ": dataset is not high fidelity");
    dataio::validate(ds);
    require(ds.size() >= 2, std::string(who) + ": need at least 2 high-fidelity samples");
}

MlpState unfreeze_last(MlpState net, std::size_t unfrozen, const char* who) {
    const std::size_t depth = net.layer_count();
    require(unfrozen >= 1 && unfrozen < depth, std::string(who) + ": unfrozen layer count " +
                                                   std::to_string(unfrozen) + " must lie in [1, " +
                                                   std::to_string(depth) + ")");
    return numcore::set_frozen(std::move(net), depth - unfrozen);
}

TrainConfig reseeded(TrainConfig cfg, std::uint64_t salt) {
    cfg.seed = numcore::derive_seed({cfg.seed, salt});
    return cfg;
}

} // namespace

// --- HF ---------------------------------------------------------------------

HfModel train_hf(const dataio::FidelityDataset& dataset_h, const numcore::MlpSpec& spec, const TrainConfig& cfg,
                 FitHistory* history) {
    require(!dataset_h.empty(), "train_hf: empty dataset");
    require_high(dataset_h, "train_hf");
    numcore::validate(spec);
    require(spec.input_dim() == dataio::kFeatureCount && spec.output_dim() == 1,
            "train_hf: network must map 14 features to 1 output");
    HfModel model;
    model.standardizer = dataio::standardize_fit(dataset_h.features);
    model.net = numcore::mlp_init(spec);
    start_at_constant(model.net, mean_of(dataset_h.labels));
    FitHistory fit = train_regressor(model.net, model.standardizer.transform(dataset_h.features),
                                     dataset_h.label_column(), cfg);
    if (history) {
        *history = std::move(fit);
    }
    return model;
}

std::vector<double> predict(const HfModel& model, const Tensor2D& x_raw) {
    return numcore::forward(model.net, model.standardizer.transform(x_raw)).predictions.column_values(0);
}

// --- PFT --------------------------------------------------------------------

PftModel train_pft(const LowFiModel& teacher, const dataio::FidelityDataset& dataset_h, std::size_t unfrozen_layers,
                   const TrainConfig& cfg, FitHistory* history) {
    require_high(dataset_h, "train_pft");
    PftModel model{teacher};
    model.tuned.net = unfreeze_last(teacher.net, unfrozen_layers, "train_pft");
    FitHistory fit = train_regressor(model.tuned.net, teacher.input_standardizer.transform(dataset_h.features),
                                     dataset_h.label_column(), cfg);
    if (history) {
        *history = std::move(fit);
    }
    return model;
}

std::vector<double> predict(const PftModel& model, const Tensor2D& x_raw) {
    return predict(model.tuned, x_raw);
}

// --- Autoencoder --------------------------------------------------------------

MlpState stack_regressor(const MlpState& encoder, const MlpState& head) {
    require(encoder.output_dim() == head.input_dim(), "stack_regressor: width mismatch");
    require(encoder.spec.activate_output, "stack_regressor: encoder output must be activated");
    require(encoder.spec.activation == head.spec.activation || head.layer_count() == 1,
            "stack_regressor: activation mismatch");
    MlpState out;
    out.spec = encoder.spec;
    out.spec.activate_output = head.spec.activate_output;
    out.spec.layer_dims.insert(out.spec.layer_dims.end(), head.spec.layer_dims.begin() + 1, head.spec.layer_dims.end());
    out.layers = encoder.layers;
    out.layers.insert(out.layers.end(), head.layers.begin(), head.layers.end());
    return out;
}

AutoencoderModel train_autoencoder(const dataio::FidelityDataset& dataset_l, const AutoencoderSpec& spec,
                                   const TrainConfig& cfg, FitHistory* history) {
    require(!dataset_l.empty(), "train_autoencoder: empty dataset");
    dataio::validate(dataset_l);
    if (spec.encoder_hidden.empty()) {
        throw ConfigError("autoencoder needs at least one encoder layer");
    }
    std::vector<std::size_t> enc_dims{dataio::kFeatureCount};
    enc_dims.insert(enc_dims.end(), spec.encoder_hidden.begin(), spec.encoder_hidden.end());
    std::vector<std::size_t> dec_dims(enc_dims.rbegin(), enc_dims.rend());
    const std::size_t k = enc_dims.back();

    AutoencoderModel model;
    model.standardizer = dataio::standardize_fit(dataset_l.features);
    model.encoder = numcore::mlp_init({enc_dims, spec.activation, numcore::derive_seed({spec.init_seed, 1}), true});
    model.decoder = numcore::mlp_init({dec_dims, spec.activation, numcore::derive_seed({spec.init_seed, 2}), false});
    model.head = numcore::mlp_init({{k, 1}, spec.activation, numcore::derive_seed({spec.init_seed, 3}), false});
    start_at_constant(model.head, mean_of(dataset_l.labels));

    const Tensor2D x = model.standardizer.transform(dataset_l.features);
    const Tensor2D y = dataset_l.label_column();
    const ValidationSplit split = split_for_validation(dataset_l.size(), cfg);
    const Tensor2D val_x = select_rows(x, split.validation);
    const Tensor2D val_y = select_rows(y, split.validation);

    numcore::OptimizerState opt(numcore::AdamConfig{.learning_rate = cfg.learning_rate});
    auto step = [&](AutoencoderModel& m, std::span<const std::size_t> batch) {
        const Tensor2D bx = select_rows(x, batch);
        const Tensor2D by = select_rows(y, batch);
        const auto etrace = numcore::forward_trace(m.encoder, bx);
        const auto dtrace = numcore::forward_trace(m.decoder, etrace.output);
        const auto htrace = numcore::forward_trace(m.head, etrace.output);
        Tensor2D g_rec, g_lab, g_code_dec, g_code_head;
        const double loss = numcore::mse_loss_grad(dtrace.output, bx, &g_rec) +
                            numcore::mse_loss_grad(htrace.output, by, &g_lab);
        const auto dgrads = numcore::backward_from(m.decoder, dtrace, g_rec, &g_code_dec);
        const auto hgrads = numcore::backward_from(m.head, htrace, g_lab, &g_code_head);
        for (std::size_t i = 0; i < g_code_dec.size(); ++i) {
            g_code_dec.values()[i] += g_code_head.values()[i];
        }
        const auto egrads = numcore::backward_from(m.encoder, etrace, g_code_dec);
        std::vector<numcore::ParamSlot> slots;
        numcore::append_slots(m.encoder, egrads, slots);
        numcore::append_slots(m.decoder, dgrads, slots);
        numcore::append_slots(m.head, hgrads, slots);
        opt.step(slots);
        return loss;
    };
    auto val_loss = [&](const AutoencoderModel& m) {
        const Tensor2D code = numcore::forward(m.encoder, val_x).predictions;
        return numcore::mse_loss_grad(numcore::forward(m.decoder, code).predictions, val_x, nullptr) +
               numcore::mse_loss_grad(numcore::forward(m.head, code).predictions, val_y, nullptr);
    };
    FitHistory fit = fit_early_stopping(model, split.train, cfg, step, val_loss);
    if (history) {
        *history = std::move(fit);
    }
    return model;
}

double reconstruction_mse(const AutoencoderModel& model, const Tensor2D& x_raw) {
    const Tensor2D x = model.standardizer.transform(x_raw);
    const Tensor2D code = numcore::forward(model.encoder, x).predictions;
    return numcore::mse_loss_grad(numcore::forward(model.decoder, code).predictions, x, nullptr);
}

std::vector<double> predict(const AutoencoderModel& model, const Tensor2D& x_raw) {
    const Tensor2D code = numcore::forward(model.encoder, model.standardizer.transform(x_raw)).predictions;
    return numcore::forward(model.head, code).predictions.column_values(0);
}

// --- MF-TLNN ------------------------------------------------------------------

std::array<double, 2> MftlnnModel::weights() const {
    const auto w = attention_weights(combiner_logits);
    return {w[0], w[1]};
}

std::array<double, 2> fit_combiner(std::span<const double> first, std::span<const double> second,
                                   std::span<const double> labels, std::size_t steps, double learning_rate) {
    require(first.size() == labels.size() && second.size() == labels.size() && !labels.empty(),
            "fit_combiner: length mismatch");
    std::array<double, 2> logits{0.0, 0.0};
    std::array<double, 2> grad{0.0, 0.0};
    numcore::OptimizerState opt(numcore::AdamConfig{.learning_rate = learning_rate});
    const double n = static_cast<double>(labels.size());
    for (std::size_t s = 0; s < steps; ++s) {
        const auto w = attention_weights(logits);
        // d loss / d w0 with w1 = 1 - w0, then through the softmax.
        double d_w0 = 0.0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const double r = w[0] * first[i] + w[1] * second[i] - labels[i];
            d_w0 += 2.0 * r * (first[i] - second[i]) / n;
        }
        grad[0] = d_w0 * w[0] * w[1];
        grad[1] = -grad[0];
        const numcore::ParamSlot slot{logits, grad, false};
        opt.step(std::span<const numcore::ParamSlot>(&slot, 1));
    }
    return logits;
}

MftlnnModel train_mftlnn(const LowFiModel& teacher, const AutoencoderModel& autoencoder,
                         const dataio::FidelityDataset& dataset_h, std::size_t unfrozen_teacher,
                         std::size_t unfrozen_autoencoder, const TrainConfig& cfg) {
    require_high(dataset_h, "train_mftlnn");
    const Tensor2D y = dataset_h.label_column();
    MftlnnModel model;
    model.teacher_tuned = teacher;
    model.teacher_tuned.net = unfreeze_last(teacher.net, unfrozen_teacher, "train_mftlnn (teacher)");
    train_regressor(model.teacher_tuned.net, teacher.input_standardizer.transform(dataset_h.features), y,
                    reseeded(cfg, 1));

    model.ae_standardizer = autoencoder.standardizer;
    model.ae_regressor = unfreeze_last(stack_regressor(autoencoder.encoder, autoencoder.head), unfrozen_autoencoder,
                                       "train_mftlnn (autoencoder)");
    train_regressor(model.ae_regressor, autoencoder.standardizer.transform(dataset_h.features), y,
                    reseeded(cfg, 2));

    const auto p_teacher = predict(model.teacher_tuned, dataset_h.features);
    const auto p_ae =
        numcore::forward(model.ae_regressor, model.ae_standardizer.transform(dataset_h.features)).predictions;
    model.combiner_logits = fit_combiner(p_teacher, p_ae.values(), dataset_h.labels);
    return model;
}

std::vector<double> predict(const MftlnnModel& model, const Tensor2D& x_raw) {
    auto out = predict(model.teacher_tuned, x_raw);
    const auto p_ae = numcore::forward(model.ae_regressor, model.ae_standardizer.transform(x_raw)).predictions;
    const auto w = model.weights();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = w[0] * out[i] + w[1] * p_ae(i, 0);
    }
    return out;
}

// --- MF-DF ----------------------------------------------------------------------

double MfdfModel::lambda() const {
    return 1.0 / (1.0 + std::exp(-mix_logit));
}

namespace {

Tensor2D mfdf_concat(const LowFiModel& teacher, const Tensor2D& x_raw) {
    const Tensor2D x = teacher.input_standardizer.transform(x_raw);
    const auto y_lh = predict(teacher, x_raw);
    Tensor2D out(x.rows(), dataio::kFeatureCount + 1);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < dataio::kFeatureCount; ++j) {
            out(i, j) = x(i, j);
        }
        out(i, dataio::kFeatureCount) = (y_lh[i] - teacher.label_mean) / teacher.label_stddev;
    }
    return out;
}

} // namespace

MfdfModel train_mfdf(std::shared_ptr<const LowFiModel> teacher, const dataio::FidelityDataset& dataset_h,
                     const std::vector<std::size_t>& nonlinear_hidden, const TrainConfig& cfg, FitHistory* history) {
    require(teacher != nullptr, "train_mfdf: missing teacher");
    require(teacher->net.fully_frozen(), "train_mfdf: teacher must be frozen");
    require_high(dataset_h, "train_mfdf");
    constexpr std::size_t width = dataio::kFeatureCount + 1;
    MfdfModel model;
    model.teacher = teacher;
    model.linear = numcore::mlp_init(
        {{width, 1}, numcore::Activation::Identity, numcore::derive_seed({cfg.seed, 0x4C494EULL}), false});
    std::vector<std::size_t> dims{width};
    dims.insert(dims.end(), nonlinear_hidden.begin(), nonlinear_hidden.end());
    dims.push_back(1);
    model.nonlinear =
        numcore::mlp_init({dims, numcore::Activation::ReLU, numcore::derive_seed({cfg.seed, 0x4E4C494EULL}), false});
    const double mean_y = mean_of(dataset_h.labels);
    start_at_constant(model.linear, mean_y);
    start_at_constant(model.nonlinear, mean_y);

    const Tensor2D x = mfdf_concat(*teacher, dataset_h.features);
    const Tensor2D y = dataset_h.label_column();
    const ValidationSplit split = split_for_validation(dataset_h.size(), cfg);
    const Tensor2D val_x = select_rows(x, split.validation);
    const Tensor2D val_y = select_rows(y, split.validation);

    auto combine = [](const MfdfModel& m, const Tensor2D& lin, const Tensor2D& nl) {
        const double lam = m.lambda();
        Tensor2D out(lin.rows(), 1);
        for (std::size_t i = 0; i < lin.rows(); ++i) {
            out(i, 0) = lam * nl(i, 0) + (1.0 - lam) * lin(i, 0);
        }
        return out;
    };

    numcore::OptimizerState opt(numcore::AdamConfig{.learning_rate = cfg.learning_rate});
    auto step = [&](MfdfModel& m, std::span<const std::size_t> batch) {
        const Tensor2D bx = select_rows(x, batch);
        const Tensor2D by = select_rows(y, batch);
        const auto ltrace = numcore::forward_trace(m.linear, bx);
        const auto ntrace = numcore::forward_trace(m.nonlinear, bx);
        Tensor2D g;
        const double loss = numcore::mse_loss_grad(combine(m, ltrace.output, ntrace.output), by, &g);
        const double lam = m.lambda();
        Tensor2D g_lin(g.rows(), 1), g_nl(g.rows(), 1);
        double d_lambda = 0.0;
        for (std::size_t i = 0; i < g.rows(); ++i) {
            g_lin(i, 0) = (1.0 - lam) * g(i, 0);
            g_nl(i, 0) = lam * g(i, 0);
            d_lambda += g(i, 0) * (ntrace.output(i, 0) - ltrace.output(i, 0));
        }
        const double d_logit = d_lambda * lam * (1.0 - lam);
        const auto lgrads = numcore::backward_from(m.linear, ltrace, g_lin);
        const auto ngrads = numcore::backward_from(m.nonlinear, ntrace, g_nl);
        std::vector<numcore::ParamSlot> slots;
        numcore::append_slots(m.linear, lgrads, slots);
        numcore::append_slots(m.nonlinear, ngrads, slots);
        slots.push_back({std::span<double>(&m.mix_logit, 1), std::span<const double>(&d_logit, 1), false});
        opt.step(slots);
        return loss;
    };
    auto val_loss = [&](const MfdfModel& m) {
        const auto lin = numcore::forward(m.linear, val_x).predictions;
        const auto nl = numcore::forward(m.nonlinear, val_x).predictions;
        return numcore::mse_loss_grad(combine(m, lin, nl), val_y, nullptr);
    };
    FitHistory fit = fit_early_stopping(model, split.train, cfg, step, val_loss);
    if (history) {
        *history = std::move(fit);
    }
    return model;
}

Tensor2D mfdf_inputs(const MfdfModel& model, const Tensor2D& x_raw) {
    return mfdf_concat(*model.teacher, x_raw);
}

MfdfBranches mfdf_branches(const MfdfModel& model, const Tensor2D& x_raw) {
    const Tensor2D x = mfdf_inputs(model, x_raw);
    return {numcore::forward(model.linear, x).predictions.column_values(0),
            numcore::forward(model.nonlinear, x).predictions.column_values(0)};
}

std::vector<double> predict(const MfdfModel& model, const Tensor2D& x_raw) {
    const auto b = mfdf_branches(model, x_raw);
    const double lam = model.lambda();
    std::vector<double> out(b.linear.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = lam * b.nonlinear[i] + (1.0 - lam) * b.linear[i];
    }
    return out;
}

} // namespace cfkd::models
