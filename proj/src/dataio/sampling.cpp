#include "cfkd/dataio/sampling.hpp"

#include "cfkd/errors.hpp"
#include "cfkd/numcore/random.hpp"

#include <algorithm>

namespace cfkd::dataio {

FoldPlan kfold(std::size_t n, std::size_t k, std::uint64_t seed) {
    require(k >= 2, "kfold: k must be >= 2");
    require(n >= k, "kfold: n (" + std::to_string(n) + ") < k (" + std::to_string(k) + ")");
    numcore::Rng rng = numcore::make_rng({seed, 0x464F4C44ULL});
    const auto order = numcore::permutation(n, rng);
    FoldPlan plan;
    plan.k = k;
    plan.folds.resize(k);
    const std::size_t base = n / k;
    const std::size_t extra = n % k;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t len = base + (f < extra ? 1 : 0);
        plan.folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                             order.begin() + static_cast<std::ptrdiff_t>(pos + len));
        pos += len;
    }
    return plan;
}

std::vector<std::size_t> FoldPlan::training_indices(std::size_t f) const {
    require(f < folds.size(), "FoldPlan: fold index out of range");
    std::vector<std::size_t> out;
    for (std::size_t g = 0; g < folds.size(); ++g) {
        if (g != f) {
            out.insert(out.end(), folds[g].begin(), folds[g].end());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

nlohmann::json to_json(const FoldPlan& plan) {
    return {{"k", plan.k}, {"folds", plan.folds}};
}

FoldPlan fold_plan_from_json(const nlohmann::json& j) {
    FoldPlan plan;
    plan.k = j.at("k").get<std::size_t>();
    plan.folds = j.at("folds").get<std::vector<std::vector<std::size_t>>>();
    require(plan.folds.size() == plan.k, "fold plan json: fold count does not match k");
    return plan;
}

std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t size, std::uint64_t seed) {
    require(size <= n, "subsample: size " + std::to_string(size) + " exceeds dataset size " + std::to_string(n));
    numcore::Rng rng = numcore::make_rng({seed, 0x53554253ULL});
    auto order = numcore::permutation(n, rng);
    order.resize(size);
    return order;
}

FidelityDataset subsample(const FidelityDataset& ds, std::size_t size, std::uint64_t seed) {
    const auto idx = subsample_indices(ds.size(), size, seed);
    return ds.subset(idx);
}

std::vector<std::size_t> complement_indices(std::size_t n, const std::vector<std::size_t>& taken) {
    std::vector<bool> used(n, false);
    for (std::size_t i : taken) {
        require(i < n, "complement_indices: index out of range");
        used[i] = true;
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i) {
        if (!used[i]) {
            out.push_back(i);
        }
    }
    return out;
}

} // namespace cfkd::dataio
