#include "cfkd/models/checkpoint.hpp"

#include "cfkd/errors.hpp"

#include <fstream>

namespace cfkd::models {

using nlohmann::json;
using numcore::MlpState;
using numcore::Tensor2D;

json to_json(const MlpState& net) {
    json layers = json::array();
    for (const auto& layer : net.layers) {
        layers.push_back({{"rows", layer.weight.rows()},
                          {"cols", layer.weight.cols()},
                          {"weight", std::vector<double>(layer.weight.values().begin(), layer.weight.values().end())},
                          {"bias", layer.bias},
                          {"frozen", layer.frozen}});
    }
    return {{"layer_dims", net.spec.layer_dims},
            {"activation", numcore::to_string(net.spec.activation)},
            {"init_seed", net.spec.init_seed},
            {"activate_output", net.spec.activate_output},
            {"layers", layers}};
}

MlpState mlp_from_json(const json& j) {
    MlpState net;
    net.spec.layer_dims = j.at("layer_dims").get<std::vector<std::size_t>>();
    net.spec.activation = numcore::activation_from_string(j.at("activation").get<std::string>());
    net.spec.init_seed = j.at("init_seed").get<std::uint64_t>();
    net.spec.activate_output = j.at("activate_output").get<bool>();
    for (const auto& lj : j.at("layers")) {
        numcore::DenseLayer layer;
        const auto rows = lj.at("rows").get<std::size_t>();
        const auto cols = lj.at("cols").get<std::size_t>();
        auto weight = lj.at("weight").get<std::vector<double>>();
        if (weight.size() != rows * cols) {
            throw IoError("checkpoint layer weight count does not match its shape");
        }
        layer.weight = Tensor2D(rows, cols, std::move(weight));
        layer.bias = lj.at("bias").get<std::vector<double>>();
        layer.frozen = lj.at("frozen").get<bool>();
        net.layers.push_back(std::move(layer));
    }
    if (net.layers.size() != net.spec.layer_count()) {
        throw IoError("checkpoint network has inconsistent layer count");
    }
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto& layer = net.layers[l];
        if (layer.weight.rows() != net.spec.layer_dims[l] || layer.weight.cols() != net.spec.layer_dims[l + 1] ||
            layer.bias.size() != net.spec.layer_dims[l + 1]) {
            throw IoError("checkpoint layer " + std::to_string(l) + " has inconsistent shape");
        }
    }
    return net;
}

json to_json(const LowFiModel& m) {
    return {{"net", to_json(m.net)},
            {"input_standardizer", dataio::to_json(m.input_standardizer)},
            {"label_mean", m.label_mean},
            {"label_stddev", m.label_stddev},
            {"feature_standardizer", dataio::to_json(m.feature_standardizer)}};
}

LowFiModel lowfi_from_json(const json& j) {
    LowFiModel m;
    m.net = mlp_from_json(j.at("net"));
    m.input_standardizer = dataio::standardizer_from_json(j.at("input_standardizer"));
    m.label_mean = j.at("label_mean").get<double>();
    m.label_stddev = j.at("label_stddev").get<double>();
    m.feature_standardizer = dataio::standardizer_from_json(j.at("feature_standardizer"));
    return m;
}

json to_json(const FusionLayer& f) {
    json transforms = json::array();
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        transforms.push_back(f.mask.active[c] ? to_json(f.transforms[c]) : json(nullptr));
    }
    return {{"aligned_dim", f.aligned_dim},
            {"mask", std::vector<bool>(f.mask.active.begin(), f.mask.active.end())},
            {"attention_logits", f.logits},
            {"transforms", transforms}};
}

FusionLayer fusion_from_json(const json& j) {
    FusionLayer f;
    f.aligned_dim = j.at("aligned_dim").get<std::size_t>();
    const auto mask = j.at("mask").get<std::vector<bool>>();
    if (mask.size() != kChannelCount) {
        throw IoError("checkpoint fusion mask must have 3 entries");
    }
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        f.mask.active[c] = mask[c];
        if (mask[c]) {
            f.transforms[c] = mlp_from_json(j.at("transforms").at(c));
        }
    }
    f.logits = j.at("attention_logits").get<std::vector<double>>();
    if (f.logits.size() != f.mask.count()) {
        throw IoError("checkpoint attention logits do not match the channel mask");
    }
    return f;
}

json to_json(const HfModel& m) {
    return {{"net", to_json(m.net)}, {"standardizer", dataio::to_json(m.standardizer)}};
}

HfModel hf_from_json(const json& j) {
    return {mlp_from_json(j.at("net")), dataio::standardizer_from_json(j.at("standardizer"))};
}

json to_json(const PftModel& m) {
    return {{"tuned", to_json(m.tuned)}};
}

PftModel pft_from_json(const json& j) {
    return {lowfi_from_json(j.at("tuned"))};
}

json to_json(const MftlnnModel& m) {
    return {{"teacher_tuned", to_json(m.teacher_tuned)},
            {"ae_regressor", to_json(m.ae_regressor)},
            {"ae_standardizer", dataio::to_json(m.ae_standardizer)},
            {"combiner_logits", m.combiner_logits}};
}

MftlnnModel mftlnn_from_json(const json& j) {
    MftlnnModel m;
    m.teacher_tuned = lowfi_from_json(j.at("teacher_tuned"));
    m.ae_regressor = mlp_from_json(j.at("ae_regressor"));
    m.ae_standardizer = dataio::standardizer_from_json(j.at("ae_standardizer"));
    m.combiner_logits = j.at("combiner_logits").get<std::array<double, 2>>();
    return m;
}

json to_json(const AutoencoderModel& m) {
    return {{"encoder", to_json(m.encoder)},
            {"decoder", to_json(m.decoder)},
            {"head", to_json(m.head)},
            {"standardizer", dataio::to_json(m.standardizer)}};
}

AutoencoderModel autoencoder_from_json(const json& j) {
    return {mlp_from_json(j.at("encoder")), mlp_from_json(j.at("decoder")), mlp_from_json(j.at("head")),
            dataio::standardizer_from_json(j.at("standardizer"))};
}

json to_json(const MfdfModel& m) {
    return {{"teacher", to_json(*m.teacher)},
            {"linear", to_json(m.linear)},
            {"nonlinear", to_json(m.nonlinear)},
            {"mix_logit", m.mix_logit}};
}

MfdfModel mfdf_from_json(const json& j) {
    MfdfModel m;
    m.teacher = std::make_shared<const LowFiModel>(lowfi_from_json(j.at("teacher")));
    m.linear = mlp_from_json(j.at("linear"));
    m.nonlinear = mlp_from_json(j.at("nonlinear"));
    m.mix_logit = j.at("mix_logit").get<double>();
    return m;
}

json to_json(const CfkdAfnModel& m) {
    return {{"teacher", to_json(*m.teacher)}, {"fusion", to_json(m.fusion)}, {"predictor", to_json(m.predictor)}};
}

CfkdAfnModel cfkd_from_json(const json& j) {
    CfkdAfnModel m;
    m.teacher = std::make_shared<const LowFiModel>(lowfi_from_json(j.at("teacher")));
    m.fusion = fusion_from_json(j.at("fusion"));
    m.predictor = mlp_from_json(j.at("predictor"));
    return m;
}

json checkpoint_envelope(const std::string& method, json model) {
    return {{"format", "cfkd-checkpoint"}, {"version", kCheckpointVersion}, {"method", method}, {"model", std::move(model)}};
}

json read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open checkpoint " + path.string());
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
    }
    if (j.value("format", "") != "cfkd-checkpoint") {
        throw IoError("checkpoint " + path.string() + " has an unknown format");
    }
    if (j.value("version", 0) != kCheckpointVersion) {
        throw IoError("checkpoint " + path.string() + " has unsupported version " + j.value("version", json()).dump());
    }
    return j;
}

void write_checkpoint(const std::filesystem::path& path, const json& envelope) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write checkpoint " + path.string());
    }
    out << envelope.dump(1) << '\n';
    if (!out) {
        throw IoError("failed writing checkpoint " + path.string());
    }
}

} // namespace cfkd::models
