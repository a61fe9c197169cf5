#pragma once

#include "cfkd/numcore/adam.hpp"
#include "cfkd/numcore/mlp.hpp"
#include "cfkd/numcore/random.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cfkd::interpret {

inline constexpr std::size_t kMinMiSamples = 64;

/// Statistics network T(a, b) for the Donsker-Varadhan bound: an MLP over
/// concat(a, b) with hidden widths [64, 64] and a scalar output.
struct MiCritic {
    numcore::MlpState net;
    numcore::OptimizerState optimizer;
};

/// `vector_dim` is the width of each of a and b. Default learning rate 1e-3.
MiCritic critic_init(std::size_t vector_dim, std::uint64_t seed, double learning_rate = 1e-3);

/// log(mean(exp(t))) without overflow.
double log_mean_exp(std::span<const double> t);

/// Rows (a_i, b_i) followed by rows (a_i, b_perm[i]).
numcore::Tensor2D critic_pairs(const numcore::Tensor2D& a, const numcore::Tensor2D& b,
                               std::span<const std::size_t> perm);

/// mean T(joint) - log mean exp T(marginal), with b shuffled by `perm` for the marginal.
double dv_bound(const numcore::MlpState& critic, const numcore::Tensor2D& a, const numcore::Tensor2D& b,
                std::span<const std::size_t> perm);

struct DvGradient {
    double bound = 0.0;
    /// dBound/da and dBound/db (critic held fixed).
    numcore::Tensor2D grad_a;
    numcore::Tensor2D grad_b;
};

/// Bound and its gradient with respect to the samples.
DvGradient dv_bound_input_grad(const numcore::MlpState& critic, const numcore::Tensor2D& a,
                               const numcore::Tensor2D& b, std::span<const std::size_t> perm);

/// One gradient-ascent step of the critic on the bound; returns the bound
/// before the step.
double critic_ascent_step(MiCritic& critic, const numcore::Tensor2D& a, const numcore::Tensor2D& b,
                          std::span<const std::size_t> perm);

struct MiEstimateOptions {
    std::size_t batch_size = 512;
    std::uint64_t seed = 0;
};

/// Trains `critic` for `steps` minibatch ascent steps on (a, b), marginals by
/// in-batch shuffling, and returns the bound on the full sample under a fresh
/// shuffle. Throws ContractError below 64 samples or on a size mismatch.
double mi_estimate_dv(const numcore::Tensor2D& a, const numcore::Tensor2D& b, MiCritic& critic, std::size_t steps,
                      const MiEstimateOptions& options = {});

} // namespace cfkd::interpret
