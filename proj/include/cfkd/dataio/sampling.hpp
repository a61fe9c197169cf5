#pragma once

#include "cfkd/dataio/dataset.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace cfkd::dataio {

/// Disjoint shuffled folds covering 0..n-1; sizes differ by at most one.
struct FoldPlan {
    std::size_t k = 0;
    std::vector<std::vector<std::size_t>> folds;

    /// Every index outside fold `f`, ascending.
    std::vector<std::size_t> training_indices(std::size_t f) const;
};

FoldPlan kfold(std::size_t n, std::size_t k, std::uint64_t seed);

nlohmann::json to_json(const FoldPlan& plan);
FoldPlan fold_plan_from_json(const nlohmann::json& j);

/// `size` distinct indices drawn uniformly from 0..n-1 (in draw order).
std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t size, std::uint64_t seed);

FidelityDataset subsample(const FidelityDataset& ds, std::size_t size, std::uint64_t seed);

/// Ascending indices of 0..n-1 not present in `taken`.
std::vector<std::size_t> complement_indices(std::size_t n, const std::vector<std::size_t>& taken);

} // namespace cfkd::dataio
