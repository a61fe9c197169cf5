#pragma once

#include "cfkd/interpret/icfkd.hpp"
#include "cfkd/numcore/mlp.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace cfkd::interpret {

/// Signed Gradient x Input contributions: row j is a feature, column k is vec(k+1).
struct AttributionReport {
    numcore::Tensor2D contributions;
    std::vector<std::string> feature_names;
    std::size_t sample_count = 0;

    friend bool operator==(const AttributionReport&, const AttributionReport&) = default;
};

/// contributions(j, k) = mean_i x(i, j) * grads[k](i, j).
AttributionReport attribution_from_gradients(const numcore::Tensor2D& x_std,
                                             const std::array<numcore::Tensor2D, 2>& grads);

/// For two networks mapping standardized features to vectors: the gradient of
/// each vector's component sum with respect to the inputs, times the inputs.
AttributionReport gradient_x_input(const std::array<numcore::MlpState, 2>& vector_nets, const numcore::Tensor2D& x_std);

/// Full-model attribution. Gradients flow through the feature channel and the
/// teacher; inputs are the features standardized by the teacher's statistics.
AttributionReport gradient_x_input(const IcfkdModel& model, const numcore::Tensor2D& x_raw);

/// d(sum of vec_k components)/d(standardized x) per sample, k = 0, 1.
std::array<numcore::Tensor2D, 2> vector_input_gradients(const IcfkdModel& model, const numcore::Tensor2D& x_raw);

/// CSV: feature,vec1_contribution,vec2_contribution.
void write_attribution_csv(const AttributionReport& report, const std::filesystem::path& path);
nlohmann::json to_json(const AttributionReport& report);
AttributionReport attribution_from_json(const nlohmann::json& j);

} // namespace cfkd::interpret
