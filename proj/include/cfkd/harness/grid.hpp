#pragma once

#include "cfkd/dataio/dataset.hpp"
#include "cfkd/harness/methods.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

namespace cfkd::harness {

/// Candidate lists for the teacher and each high-fidelity method.
struct GridSpace {
    std::vector<TeacherConfig> teacher;
    std::map<Method, std::vector<MethodConfig>> methods;
};

/// Widths starting at `first`, halving down to a floor of 16.
std::vector<std::size_t> halving_widths(std::size_t first, std::size_t depth);

/// Teacher: depth 5-7, first width {512,256,128}, {ReLU, LeakyReLU}, batch
/// {16,32,64}, lr {0.01,0.001,0.0001}. High-fidelity methods: ReLU, batch 8,
/// lr {0.01,0.001}; HF and MF-DF depth 2-6 with first width {256,128,64,32};
/// PFT unfrozen {1,2}; MF-TLNN {1,2} for both branches; CFKD-AFN and its
/// variants as MF-DF plus aligned width {16,32}; iCFKD-AFN beta {100,500,1000}
/// x width {8,16,32} on the treatment's CFKD-AFN backbone.
GridSpace reference_grid(dataio::TreatmentKind treatment);

/// Throws ContractError if the teacher list or any method list is empty.
void validate(const GridSpace& space);

struct CandidateScore {
    std::size_t candidate = 0;
    std::vector<double> fold_mse;
    /// +inf when training diverged on some fold.
    double mean_mse = 0.0;
    std::size_t parameters = 0;
    double learning_rate = 0.0;
};

struct GridOutcome {
    std::size_t best = 0;
    std::vector<CandidateScore> table;
};

/// score(candidate, train_indices, validation_indices) -> validation MSE.
using FoldScore = std::function<double(std::size_t, std::span<const std::size_t>, std::span<const std::size_t>)>;

/// Exhaustive k-fold search over `candidate_count` candidates on a dataset of
/// n rows. The winner has the lowest mean validation MSE; ties go to fewer
/// parameters, then lower learning rate, then the earlier candidate. A
/// NumericError from `score` counts as +inf for that candidate.
GridOutcome grid_search(std::size_t candidate_count, std::size_t n, std::size_t k, std::uint64_t seed,
                        const FoldScore& score, std::span<const std::size_t> parameters,
                        std::span<const double> learning_rates);

template <class Candidate>
struct GridResult {
    Candidate best;
    GridOutcome outcome;
};

GridResult<MethodConfig> grid_search(const std::vector<MethodConfig>& candidates, const Upstream& upstream,
                                     const dataio::FidelityDataset& dataset_h, std::size_t k, std::uint64_t seed);

GridResult<TeacherConfig> grid_search(const std::vector<TeacherConfig>& candidates,
                                      const dataio::FidelityDataset& dataset_l, std::size_t k, std::uint64_t seed);

nlohmann::json to_json(const GridOutcome& outcome);

} // namespace cfkd::harness
