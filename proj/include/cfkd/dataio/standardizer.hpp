#pragma once

#include "cfkd/dataio/dataset.hpp"
#include "cfkd/numcore/tensor.hpp"

#include <json.hpp>

#include <vector>

namespace cfkd::dataio {

/// Per-feature z-scoring. Constant columns get stddev 1 so they map to 0.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> stddev;

    std::size_t width() const { return mean.size(); }
    numcore::Tensor2D transform(const numcore::Tensor2D& x) const;
    numcore::Tensor2D inverse_transform(const numcore::Tensor2D& z) const;

    friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

Standardizer standardize_fit(const numcore::Tensor2D& x);
Standardizer standardize_fit(const FidelityDataset& ds);
/// Returns a copy with standardized features; labels are untouched.
FidelityDataset standardize_apply(const Standardizer& s, const FidelityDataset& ds);

nlohmann::json to_json(const Standardizer& s);
Standardizer standardizer_from_json(const nlohmann::json& j);

} // namespace cfkd::dataio
