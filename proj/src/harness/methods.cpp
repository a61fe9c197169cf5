#include "cfkd/harness/methods.hpp"

#include "cfkd/errors.hpp"
#include "cfkd/models/checkpoint.hpp"
#include "cfkd/models/fusion.hpp"
#include "cfkd/models/train.hpp"
#include "cfkd/numcore/random.hpp"

#include <array>

namespace cfkd::harness {

using dataio::TreatmentKind;
using models::Channel;
using models::ChannelMask;
using nlohmann::json;
using numcore::derive_seed;

namespace {

struct MethodInfo {
    Method method;
    const char* key;
    const char* label;
};

constexpr std::array<MethodInfo, 9> kMethods{{
    {Method::Hf, "hf", "HF"},
    {Method::Pft, "pft", "PFT"},
    {Method::Mftlnn, "mftlnn", "MF-TLNN"},
    {Method::Mfdf, "mfdf", "MF-DF"},
    {Method::Cfkd, "cfkd", "CFKD-AFN"},
    {Method::Icfkd, "icfkd", "iCFKD-AFN"},
    {Method::CfkdNoTeacherOutput, "cfkd-no-ylh", "w/o y_lh"},
    {Method::CfkdNoTeacherFeature, "cfkd-no-yfeature", "w/o y_feature"},
    {Method::CfkdNoInput, "cfkd-no-x", "w/o x_h"},
}};

const MethodInfo& info(Method m) {
    for (const auto& i : kMethods) {
        if (i.method == m) {
            return i;
        }
    }
    throw ContractError("unknown method id " + std::to_string(static_cast<int>(m)));
}

ChannelMask channel_mask(Method m) {
    switch (m) {
    case Method::CfkdNoTeacherOutput:
        return ChannelMask::without(Channel::TeacherOutput);
    case Method::CfkdNoTeacherFeature:
        return ChannelMask::without(Channel::TeacherFeature);
    case Method::CfkdNoInput:
        return ChannelMask::without(Channel::Input);
    default:
        return ChannelMask{};
    }
}

models::TrainConfig train_config(const MethodConfig& cfg, std::uint64_t seed) {
    models::TrainConfig tc;
    tc.learning_rate = cfg.learning_rate;
    tc.batch_size = cfg.batch_size;
    tc.seed = seed;
    return tc;
}

models::CfkdSpec cfkd_spec(const MethodConfig& cfg) {
    models::CfkdSpec spec;
    spec.predictor_hidden = cfg.hidden;
    spec.aligned_dim = cfg.aligned_dim;
    spec.channels = channel_mask(cfg.method);
    return spec;
}

interpret::IcfkdSpec icfkd_spec(const MethodConfig& cfg) {
    interpret::IcfkdSpec spec;
    spec.predictor_hidden = cfg.hidden;
    spec.aligned_dim = cfg.aligned_dim;
    spec.beta = cfg.beta;
    spec.vector_dim = cfg.vector_dim;
    return spec;
}

std::size_t unfrozen_parameters(const numcore::MlpState& net) {
    std::size_t total = 0;
    for (const auto& layer : net.layers) {
        if (!layer.frozen) {
            total += layer.weight.rows() * layer.weight.cols() + layer.bias.size();
        }
    }
    return total;
}

std::size_t tail_parameters(const std::vector<std::size_t>& dims, std::size_t last_layers) {
    std::size_t total = 0;
    const std::size_t layers = dims.size() - 1;
    for (std::size_t l = layers - std::min(last_layers, layers); l < layers; ++l) {
        total += dims[l] * dims[l + 1] + dims[l + 1];
    }
    return total;
}

const models::LowFiModel& need_teacher(const Upstream& up) {
    require(up.teacher != nullptr, "method needs a trained low-fidelity teacher");
    return *up.teacher;
}

} // namespace

std::string method_key(Method m) { return info(m).key; }

Method method_from_key(const std::string& key) {
    for (const auto& i : kMethods) {
        if (key == i.key) {
            return i.method;
        }
    }
    throw ContractError("unknown method '" + key + "'");
}

std::string method_label(Method m) { return info(m).label; }

std::uint64_t method_id(Method m) { return static_cast<std::uint64_t>(info(m).method); }

bool uses_teacher(Method m) { return m != Method::Hf; }

bool uses_autoencoder(Method m) { return m == Method::Mftlnn; }

TeacherConfig reference_teacher(TreatmentKind treatment) {
    const auto s = models::reference_settings(treatment);
    return {s.teacher_hidden, s.teacher_activation, s.teacher_batch, s.teacher_lr};
}

MethodConfig reference_config(Method method, TreatmentKind treatment) {
    const auto s = models::reference_settings(treatment);
    MethodConfig c;
    c.method = method;
    c.learning_rate = s.hf_lr;
    c.batch_size = s.hf_batch;
    c.aligned_dim = s.cfkd_aligned_dim;
    c.beta = s.icfkd_beta;
    c.vector_dim = s.icfkd_dim;
    switch (method) {
    case Method::Hf:
        c.hidden = s.hf_hidden;
        break;
    case Method::Pft:
        c.unfrozen = s.pft_unfrozen;
        break;
    case Method::Mftlnn:
        c.unfrozen = s.mftlnn_teacher_unfrozen;
        c.unfrozen_autoencoder = s.mftlnn_autoencoder_unfrozen;
        break;
    case Method::Mfdf:
        c.hidden = s.mfdf_hidden;
        break;
    default:
        c.hidden = s.cfkd_hidden;
        break;
    }
    return c;
}

json to_json(const TeacherConfig& c) {
    return {{"hidden", c.hidden},
            {"activation", numcore::to_string(c.activation)},
            {"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate}};
}

TeacherConfig teacher_config_from_json(const json& j) {
    TeacherConfig c;
    c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    c.activation = numcore::activation_from_string(j.at("activation").get<std::string>());
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    return c;
}

json to_json(const MethodConfig& c) {
    json j{{"method", method_key(c.method)}, {"learning_rate", c.learning_rate}, {"batch_size", c.batch_size}};
    switch (c.method) {
    case Method::Hf:
    case Method::Mfdf:
        j["hidden"] = c.hidden;
        break;
    case Method::Pft:
        j["unfrozen"] = c.unfrozen;
        break;
    case Method::Mftlnn:
        j["unfrozen"] = c.unfrozen;
        j["unfrozen_autoencoder"] = c.unfrozen_autoencoder;
        break;
    case Method::Icfkd:
        j["hidden"] = c.hidden;
        j["aligned_dim"] = c.aligned_dim;
        j["beta"] = c.beta;
        j["vector_dim"] = c.vector_dim;
        break;
    default:
        j["hidden"] = c.hidden;
        j["aligned_dim"] = c.aligned_dim;
        break;
    }
    return j;
}

MethodConfig method_config_from_json(const json& j, const MethodConfig& fallback) {
    MethodConfig c = fallback;
    if (j.contains("method")) {
        c.method = method_from_key(j.at("method").get<std::string>());
    }
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    if (j.contains("hidden")) {
        c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    }
    c.unfrozen = j.value("unfrozen", c.unfrozen);
    c.unfrozen_autoencoder = j.value("unfrozen_autoencoder", c.unfrozen_autoencoder);
    c.aligned_dim = j.value("aligned_dim", c.aligned_dim);
    c.beta = j.value("beta", c.beta);
    c.vector_dim = j.value("vector_dim", c.vector_dim);
    require(c.learning_rate > 0.0, "config: learning_rate must be positive");
    require(c.batch_size > 0, "config: batch_size must be positive");
    return c;
}

models::LowFiModel train_teacher(const dataio::FidelityDataset& dataset_l, const TeacherConfig& cfg,
                                 std::uint64_t seed) {
    models::TrainConfig tc;
    tc.learning_rate = cfg.learning_rate;
    tc.batch_size = cfg.batch_size;
    tc.seed = derive_seed({seed, 0x54524E});
    const auto spec = models::regressor_spec(cfg.hidden, cfg.activation, derive_seed({seed, 0x494E4954}));
    return models::train_low_fidelity(dataset_l, spec, tc);
}

models::AutoencoderModel train_teacher_autoencoder(const dataio::FidelityDataset& dataset_l,
                                                   const TeacherConfig& cfg, std::uint64_t seed) {
    models::TrainConfig tc;
    tc.learning_rate = cfg.learning_rate;
    tc.batch_size = cfg.batch_size;
    tc.seed = derive_seed({seed, 0x54524E});
    const models::AutoencoderSpec spec{cfg.hidden, cfg.activation, derive_seed({seed, 0x494E4954})};
    return models::train_autoencoder(dataset_l, spec, tc);
}

TrainedModel train_method(const MethodConfig& cfg, const Upstream& up, const dataio::FidelityDataset& dataset_h,
                          std::uint64_t seed) {
    const auto tc = train_config(cfg, derive_seed({seed, 0x464954}));
    const std::uint64_t init_seed = derive_seed({seed, 0x494E4954});
    switch (cfg.method) {
    case Method::Hf:
        return models::train_hf(dataset_h, models::regressor_spec(cfg.hidden, numcore::Activation::ReLU, init_seed),
                                tc);
    case Method::Pft:
        return models::train_pft(need_teacher(up), dataset_h, cfg.unfrozen, tc);
    case Method::Mftlnn:
        require(up.autoencoder != nullptr, "MF-TLNN needs a trained autoencoder");
        return models::train_mftlnn(need_teacher(up), *up.autoencoder, dataset_h, cfg.unfrozen,
                                    cfg.unfrozen_autoencoder, tc);
    case Method::Mfdf:
        need_teacher(up);
        return models::train_mfdf(up.teacher, dataset_h, cfg.hidden, tc);
    case Method::Icfkd:
        need_teacher(up);
        return interpret::train_icfkd(up.teacher, dataset_h, icfkd_spec(cfg), tc);
    default:
        need_teacher(up);
        return models::train_cfkd(up.teacher, dataset_h, cfkd_spec(cfg), tc);
    }
}

std::vector<double> predict(const TrainedModel& model, const numcore::Tensor2D& x_raw) {
    return std::visit(
        [&](const auto& m) -> std::vector<double> {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, interpret::IcfkdModel>) {
                return interpret::predict(m, x_raw);
            } else {
                return models::predict(m, x_raw);
            }
        },
        model);
}

std::size_t trainable_parameter_count(const MethodConfig& cfg, const Upstream& up) {
    switch (cfg.method) {
    case Method::Hf:
        return models::regressor_spec(cfg.hidden, numcore::Activation::ReLU, 0).parameter_count();
    case Method::Pft:
        return tail_parameters(need_teacher(up).net.spec.layer_dims, cfg.unfrozen);
    case Method::Mftlnn: {
        require(up.autoencoder != nullptr, "MF-TLNN needs a trained autoencoder");
        const auto ae = models::stack_regressor(up.autoencoder->encoder, up.autoencoder->head);
        return tail_parameters(need_teacher(up).net.spec.layer_dims, cfg.unfrozen) +
               tail_parameters(ae.spec.layer_dims, cfg.unfrozen_autoencoder) + 2;
    }
    case Method::Mfdf: {
        std::vector<std::size_t> dims{dataio::kFeatureCount + 1};
        dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
        dims.push_back(1);
        return (dataio::kFeatureCount + 2) + numcore::MlpSpec{dims}.parameter_count() + 1;
    }
    case Method::Icfkd: {
        const auto m = interpret::icfkd_init(up.teacher, icfkd_spec(cfg), 0.0, 0);
        std::size_t total = m.fusion.logits.size() + unfrozen_parameters(m.trunk) +
                            unfrozen_parameters(m.vec_heads[0]) + unfrozen_parameters(m.vec_heads[1]) +
                            unfrozen_parameters(m.head);
        for (const auto& t : m.fusion.transforms) {
            total += unfrozen_parameters(t);
        }
        return total;
    }
    default: {
        const auto fusion =
            models::fusion_init(need_teacher(up).hidden_width(), cfg.aligned_dim, channel_mask(cfg.method), 0);
        std::size_t total = fusion.logits.size();
        for (const auto& t : fusion.transforms) {
            total += unfrozen_parameters(t);
        }
        std::vector<std::size_t> dims{fusion.fused_dim()};
        dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
        dims.push_back(1);
        return total + numcore::MlpSpec{dims}.parameter_count();
    }
    }
}

json checkpoint_model(const TrainedModel& model) {
    return std::visit(
        [](const auto& m) -> json {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, interpret::IcfkdModel>) {
                return interpret::to_json(m);
            } else {
                return models::to_json(m);
            }
        },
        model);
}

TrainedModel model_from_checkpoint(const std::string& key, const json& j) {
    try {
        const Method m = method_from_key(key);
        switch (m) {
        case Method::Hf:
            return models::hf_from_json(j);
        case Method::Pft:
            return models::pft_from_json(j);
        case Method::Mftlnn:
            return models::mftlnn_from_json(j);
        case Method::Mfdf:
            return models::mfdf_from_json(j);
        case Method::Icfkd:
            return interpret::icfkd_from_json(j);
        default:
            return models::cfkd_from_json(j);
        }
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed checkpoint model: ") + e.what());
    }
}

} // namespace cfkd::harness
