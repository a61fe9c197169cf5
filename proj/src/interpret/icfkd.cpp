#include "cfkd/interpret/icfkd.hpp"

#include "cfkd/errors.hpp"
#include "cfkd/models/checkpoint.hpp"
#include "cfkd/numcore/adam.hpp"

#include <algorithm>
#include <numeric>

namespace cfkd::interpret {

using models::ChannelInputs;
using models::FusionTrace;
using numcore::MlpState;
using numcore::Tensor2D;

void validate(const IcfkdSpec& spec) {
    const std::array<double, 4> betas{0.0, 100.0, 500.0, 1000.0};
    if (std::find(betas.begin(), betas.end(), spec.beta) == betas.end()) {
        throw ConfigError("beta must be one of 0, 100, 500, 1000");
    }
    if (spec.vector_dim != 8 && spec.vector_dim != 16 && spec.vector_dim != 32) {
        throw ConfigError("decoupled vector width must be 8, 16 or 32");
    }
    if (spec.predictor_hidden.empty()) {
        throw ConfigError("the trunk needs at least one hidden layer");
    }
    if (spec.critic_steps == 0) {
        throw ConfigError("critic steps must be positive");
    }
    if (spec.mi_batch_size < 2) {
        throw ConfigError("the MI sample needs at least 2 rows");
    }
}

IcfkdModel icfkd_init(std::shared_ptr<const models::LowFiModel> teacher, const IcfkdSpec& spec, double label_mean,
                      std::uint64_t seed) {
    validate(spec);
    require(teacher != nullptr, "icfkd_init: missing teacher");
    IcfkdModel model;
    model.teacher = teacher;
    model.beta = spec.beta;
    model.fusion = models::fusion_init(teacher->hidden_width(), spec.aligned_dim, models::ChannelMask{},
                                       numcore::derive_seed({seed, 0x46555345ULL}));
    std::vector<std::size_t> dims{model.fusion.fused_dim()};
    dims.insert(dims.end(), spec.predictor_hidden.begin(), spec.predictor_hidden.end());
    model.trunk = numcore::mlp_init(
        {dims, numcore::Activation::ReLU, numcore::derive_seed({seed, 0x50524544ULL}), true});
    const std::size_t h = dims.back();
    for (std::size_t k = 0; k < 2; ++k) {
        model.vec_heads[k] = numcore::mlp_init(
            {{h, spec.vector_dim}, numcore::Activation::Identity, numcore::derive_seed({seed, 0x564543ULL, k}), false});
    }
    model.head = numcore::mlp_init({{2 * spec.vector_dim, 1}, numcore::Activation::Identity,
                                    numcore::derive_seed({seed, 0x48454144ULL}), false});
    models::start_at_constant(model.head, label_mean);
    return model;
}

namespace {

struct IcfkdTrace {
    FusionTrace fusion;
    Tensor2D fused;
    numcore::ForwardTrace trunk;
    std::array<numcore::ForwardTrace, 2> vecs;
    numcore::ForwardTrace head;
};

IcfkdTrace trace_forward(const IcfkdModel& m, const ChannelInputs& in) {
    IcfkdTrace t;
    t.fused = models::fuse(m.fusion, in, &t.fusion);
    t.trunk = numcore::forward_trace(m.trunk, t.fused);
    for (std::size_t k = 0; k < 2; ++k) {
        t.vecs[k] = numcore::forward_trace(m.vec_heads[k], t.trunk.output);
    }
    const std::array<Tensor2D, 2> both{t.vecs[0].output, t.vecs[1].output};
    t.head = numcore::forward_trace(m.head, hconcat(both));
    return t;
}

struct IcfkdGradient {
    numcore::GradientSet trunk;
    std::array<numcore::GradientSet, 2> vecs;
    numcore::GradientSet head;
    models::FusionGradient fusion;
};

/// Backward from dLoss/dVec{1,2} (and optionally the head's own gradients).
IcfkdGradient backward_from_vectors(const IcfkdModel& m, const ChannelInputs& in, const IcfkdTrace& t,
                                    const std::array<Tensor2D, 2>& g_vec, ChannelInputs* input_grads) {
    IcfkdGradient g;
    Tensor2D g_hidden;
    for (std::size_t k = 0; k < 2; ++k) {
        Tensor2D g_h;
        g.vecs[k] = numcore::backward_from(m.vec_heads[k], t.vecs[k], g_vec[k], &g_h);
        if (k == 0) {
            g_hidden = std::move(g_h);
        } else {
            for (std::size_t i = 0; i < g_hidden.size(); ++i) {
                g_hidden.values()[i] += g_h.values()[i];
            }
        }
    }
    Tensor2D g_fused;
    g.trunk = numcore::backward_from(m.trunk, t.trunk, g_hidden, &g_fused);
    g.fusion = models::fuse_backward(m.fusion, in, t.fusion, g_fused, input_grads);
    return g;
}

} // namespace

IcfkdModel train_icfkd(std::shared_ptr<const models::LowFiModel> teacher, const dataio::FidelityDataset& dataset_h,
                       const IcfkdSpec& spec, const models::TrainConfig& cfg, IcfkdTrainStats* stats) {
    validate(spec);
    require(teacher != nullptr, "train_icfkd: missing teacher");
    require(teacher->net.fully_frozen(), "train_icfkd: teacher must be frozen");
    require(dataset_h.fidelity == dataio::Fidelity::High, "train_icfkd: dataset is not high fidelity");
    dataio::validate(dataset_h);
    require(dataset_h.size() >= 2, "train_icfkd: need at least 2 high-fidelity samples");

    IcfkdModel model = icfkd_init(teacher, spec, models::mean_of(dataset_h.labels), cfg.seed);
    const ChannelInputs inputs = models::channel_inputs(*teacher, dataset_h.features);
    const Tensor2D y = dataset_h.label_column();
    const models::ValidationSplit split = models::split_for_validation(dataset_h.size(), cfg);
    const ChannelInputs val_in = inputs.select(split.validation);
    const Tensor2D val_y = select_rows(y, split.validation);

    MiCritic critic = critic_init(spec.vector_dim, numcore::derive_seed({cfg.seed, 0x435249ULL}), spec.critic_lr);
    numcore::Rng shuffle_rng = numcore::make_rng({cfg.seed, 0x5045524DULL});
    numcore::OptimizerState opt(numcore::AdamConfig{.learning_rate = cfg.learning_rate});
    const std::size_t d = spec.vector_dim;
    std::vector<double> batch_mi;

    auto step = [&](IcfkdModel& m, std::span<const std::size_t> batch) {
        const std::size_t b = batch.size();
        const bool use_mi = m.beta > 0.0 && split.train.size() >= 2;
        // Rows [0, b) are the minibatch, rows [b, b + mi) the MI sample.
        std::vector<std::size_t> rows(batch.begin(), batch.end());
        if (use_mi) {
            const auto order = numcore::permutation(split.train.size(), shuffle_rng);
            const std::size_t mi = std::min(spec.mi_batch_size, order.size());
            for (std::size_t i = 0; i < mi; ++i) {
                rows.push_back(split.train[order[i]]);
            }
        }
        const ChannelInputs bin = inputs.select(rows);
        const Tensor2D by = select_rows(y, batch);
        IcfkdTrace t = trace_forward(m, bin);
        const std::size_t total = rows.size();

        Tensor2D head_out(b, 1);
        for (std::size_t i = 0; i < b; ++i) {
            head_out(i, 0) = t.head.output(i, 0);
        }
        Tensor2D g_batch;
        const double loss = numcore::mse_loss_grad(head_out, by, &g_batch);
        Tensor2D g_out(total, 1);
        for (std::size_t i = 0; i < b; ++i) {
            g_out(i, 0) = g_batch(i, 0);
        }
        Tensor2D g_z;
        const auto head_grads = numcore::backward_from(m.head, t.head, g_out, &g_z);
        std::array<Tensor2D, 2> g_vec{slice_cols(g_z, 0, d), slice_cols(g_z, d, d)};
        if (use_mi) {
            std::vector<std::size_t> mi_rows(total - b);
            std::iota(mi_rows.begin(), mi_rows.end(), b);
            const Tensor2D v1 = select_rows(t.vecs[0].output, mi_rows);
            const Tensor2D v2 = select_rows(t.vecs[1].output, mi_rows);
            for (std::size_t s = 0; s < spec.critic_steps; ++s) {
                const auto perm = numcore::permutation(mi_rows.size(), shuffle_rng);
                critic_ascent_step(critic, v1, v2, perm);
            }
            const auto perm = numcore::permutation(mi_rows.size(), shuffle_rng);
            const DvGradient dv = dv_bound_input_grad(critic.net, v1, v2, perm);
            // A constant critic already bounds MI below by 0, so the penalty is
            // max(bound, 0). Descending a negative bound only exploits the critic.
            if (dv.bound > 0.0) {
                for (std::size_t i = 0; i < mi_rows.size(); ++i) {
                    for (std::size_t c = 0; c < d; ++c) {
                        g_vec[0](b + i, c) += m.beta * dv.grad_a(i, c);
                        g_vec[1](b + i, c) += m.beta * dv.grad_b(i, c);
                    }
                }
            }
            batch_mi.push_back(dv.bound);
        }
        IcfkdGradient g = backward_from_vectors(m, bin, t, g_vec, nullptr);
        g.head = head_grads;
        std::vector<numcore::ParamSlot> slots;
        numcore::append_slots(m.head, g.head, slots);
        for (std::size_t k = 0; k < 2; ++k) {
            numcore::append_slots(m.vec_heads[k], g.vecs[k], slots);
        }
        numcore::append_slots(m.trunk, g.trunk, slots);
        models::append_slots(m.fusion, g.fusion, slots);
        opt.step(slots);
        return loss;
    };
    auto val_loss = [&](const IcfkdModel& m) {
        return numcore::mse_loss_grad(trace_forward(m, val_in).head.output, val_y, nullptr);
    };
    models::FitHistory fit = models::fit_early_stopping(model, split.train, cfg, step, val_loss);
    if (stats) {
        stats->history = std::move(fit);
        stats->batch_mi = std::move(batch_mi);
    }
    return model;
}

std::vector<double> predict(const IcfkdModel& model, const Tensor2D& x_raw) {
    const ChannelInputs in = models::channel_inputs(*model.teacher, x_raw);
    return trace_forward(model, in).head.output.column_values(0);
}

DecoupledVectors decoupled_vectors(const IcfkdModel& model, const Tensor2D& x_raw) {
    const ChannelInputs in = models::channel_inputs(*model.teacher, x_raw);
    IcfkdTrace t = trace_forward(model, in);
    return {std::move(t.vecs[0].output), std::move(t.vecs[1].output)};
}

double vector_mutual_information(const IcfkdModel& model, const Tensor2D& x_raw, std::size_t critic_steps,
                                 std::uint64_t seed) {
    const DecoupledVectors v = decoupled_vectors(model, x_raw);
    MiCritic critic = critic_init(model.vector_dim(), seed);
    return mi_estimate_dv(v.vec1, v.vec2, critic, critic_steps, {.batch_size = 512, .seed = seed});
}

// Shared with attribution.cpp.
std::array<Tensor2D, 2> vector_input_gradients(const IcfkdModel& model, const Tensor2D& x_raw) {
    const models::LowFiModel& teacher = *model.teacher;
    const std::size_t depth = teacher.net.layer_count();
    MlpState body;
    body.spec = teacher.net.spec;
    body.spec.layer_dims.pop_back();
    body.spec.activate_output = true;
    body.layers.assign(teacher.net.layers.begin(), teacher.net.layers.end() - 1);
    const numcore::DenseLayer& last = teacher.net.layers[depth - 1];

    const Tensor2D x_std = teacher.input_standardizer.transform(x_raw);
    const auto body_trace = numcore::forward_trace(body, x_std);
    models::Distilled distilled;
    distilled.y_feature = body_trace.output;
    {
        Tensor2D out = matmul(body_trace.output, last.weight);
        add_row_vector(out, last.bias);
        distilled.y_lh = out.column_values(0);
    }
    const ChannelInputs in = models::channel_inputs(teacher, distilled, x_std);
    const IcfkdTrace t = trace_forward(model, in);
    const std::size_t n = x_std.rows();
    const std::size_t d = model.vector_dim();
    const std::size_t k_width = body_trace.output.cols();

    std::array<Tensor2D, 2> result;
    for (std::size_t k = 0; k < 2; ++k) {
        std::array<Tensor2D, 2> g_vec{Tensor2D(n, d, 0.0), Tensor2D(n, d, 0.0)};
        g_vec[k] = Tensor2D(n, d, 1.0);
        ChannelInputs g_in;
        backward_from_vectors(model, in, t, g_vec, &g_in);
        // Back through the channel rescaling into the teacher's last hidden layer.
        Tensor2D g_hidden(n, k_width);
        for (std::size_t i = 0; i < n; ++i) {
            const double g_ylh = g_in.teacher_output(i, 0) / teacher.label_stddev;
            for (std::size_t j = 0; j < k_width; ++j) {
                g_hidden(i, j) = g_in.teacher_feature(i, j) / teacher.feature_standardizer.stddev[j] +
                                 g_ylh * last.weight(j, 0);
            }
        }
        Tensor2D g_x_teacher;
        numcore::backward_from(body, body_trace, g_hidden, &g_x_teacher);
        result[k] = g_in.input;
        for (std::size_t i = 0; i < result[k].size(); ++i) {
            result[k].values()[i] += g_x_teacher.values()[i];
        }
    }
    return result;
}

nlohmann::json to_json(const IcfkdModel& model) {
    return {{"teacher", models::to_json(*model.teacher)},
            {"fusion", models::to_json(model.fusion)},
            {"trunk", models::to_json(model.trunk)},
            {"vec_heads", {models::to_json(model.vec_heads[0]), models::to_json(model.vec_heads[1])}},
            {"head", models::to_json(model.head)},
            {"beta", model.beta}};
}

IcfkdModel icfkd_from_json(const nlohmann::json& j) {
    IcfkdModel m;
    m.teacher = std::make_shared<const models::LowFiModel>(models::lowfi_from_json(j.at("teacher")));
    m.fusion = models::fusion_from_json(j.at("fusion"));
    m.trunk = models::mlp_from_json(j.at("trunk"));
    m.vec_heads[0] = models::mlp_from_json(j.at("vec_heads").at(0));
    m.vec_heads[1] = models::mlp_from_json(j.at("vec_heads").at(1));
    m.head = models::mlp_from_json(j.at("head"));
    m.beta = j.at("beta").get<double>();
    if (m.vec_heads[0].output_dim() != m.vec_heads[1].output_dim() || m.head.input_dim() != 2 * m.vector_dim()) {
        throw IoError("checkpoint iCFKD heads have inconsistent widths");
    }
    return m;
}

} // namespace cfkd::interpret
