#include "cfkd/interpret/attribution.hpp"

#include "cfkd/dataio/dataset.hpp"
#include "cfkd/errors.hpp"

#include <cstdio>
#include <fstream>

namespace cfkd::interpret {

using numcore::Tensor2D;

AttributionReport attribution_from_gradients(const Tensor2D& x_std, const std::array<Tensor2D, 2>& grads) {
    require(x_std.rows() > 0, "attribution: empty input");
    for (const auto& g : grads) {
        require(g.rows() == x_std.rows() && g.cols() == x_std.cols(), "attribution: gradient shape mismatch");
    }
    AttributionReport report;
    report.sample_count = x_std.rows();
    report.contributions = Tensor2D(x_std.cols(), 2);
    for (std::size_t k = 0; k < 2; ++k) {
        for (std::size_t j = 0; j < x_std.cols(); ++j) {
            double sum = 0.0;
            for (std::size_t i = 0; i < x_std.rows(); ++i) {
                sum += x_std(i, j) * grads[k](i, j);
            }
            report.contributions(j, k) = sum / static_cast<double>(x_std.rows());
        }
    }
    if (x_std.cols() == dataio::kFeatureCount) {
        for (auto name : dataio::feature_names()) {
            report.feature_names.emplace_back(name);
        }
    } else {
        for (std::size_t j = 0; j < x_std.cols(); ++j) {
            report.feature_names.push_back("x" + std::to_string(j));
        }
    }
    if (!report.contributions.all_finite()) {
        throw NumericError("attribution produced non-finite values");
    }
    return report;
}

AttributionReport gradient_x_input(const std::array<numcore::MlpState, 2>& vector_nets, const Tensor2D& x_std) {
    std::array<Tensor2D, 2> grads;
    for (std::size_t k = 0; k < 2; ++k) {
        const auto& net = vector_nets[k];
        require(net.input_dim() == x_std.cols(), "gradient_x_input: input width mismatch");
        const auto trace = numcore::forward_trace(net, x_std);
        numcore::backward_from(net, trace, Tensor2D(x_std.rows(), net.output_dim(), 1.0), &grads[k]);
    }
    return attribution_from_gradients(x_std, grads);
}

AttributionReport gradient_x_input(const IcfkdModel& model, const Tensor2D& x_raw) {
    const Tensor2D x_std = model.teacher->input_standardizer.transform(x_raw);
    return attribution_from_gradients(x_std, vector_input_gradients(model, x_raw));
}

void write_attribution_csv(const AttributionReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << "feature,vec1_contribution,vec2_contribution\n";
    char buf[64];
    for (std::size_t j = 0; j < report.feature_names.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%.6f,%.6f", report.contributions(j, 0), report.contributions(j, 1));
        out << report.feature_names[j] << ',' << buf << '\n';
    }
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

nlohmann::json to_json(const AttributionReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t j = 0; j < report.feature_names.size(); ++j) {
        rows.push_back({{"feature", report.feature_names[j]},
                        {"vec1", report.contributions(j, 0)},
                        {"vec2", report.contributions(j, 1)}});
    }
    return {{"sample_count", report.sample_count}, {"contributions", rows}};
}

AttributionReport attribution_from_json(const nlohmann::json& j) {
    AttributionReport report;
    report.sample_count = j.at("sample_count").get<std::size_t>();
    const auto& rows = j.at("contributions");
    report.contributions = Tensor2D(rows.size(), 2);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        report.feature_names.push_back(rows[r].at("feature").get<std::string>());
        report.contributions(r, 0) = rows[r].at("vec1").get<double>();
        report.contributions(r, 1) = rows[r].at("vec2").get<double>();
    }
    return report;
}

} // namespace cfkd::interpret
