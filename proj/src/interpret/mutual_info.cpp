#include "cfkd/interpret/mutual_info.hpp"

#include "cfkd/errors.hpp"

#include <algorithm>
#include <cmath>

namespace cfkd::interpret {

using numcore::Tensor2D;

MiCritic critic_init(std::size_t vector_dim, std::uint64_t seed, double learning_rate) {
    require(vector_dim >= 1, "critic_init: vector width must be positive");
    MiCritic critic;
    critic.net = numcore::mlp_init({{2 * vector_dim, 64, 64, 1}, numcore::Activation::ReLU, seed, false});
    critic.optimizer = numcore::OptimizerState(numcore::AdamConfig{.learning_rate = learning_rate});
    return critic;
}

double log_mean_exp(std::span<const double> t) {
    require(!t.empty(), "log_mean_exp: empty input");
    const double top = *std::max_element(t.begin(), t.end());
    double sum = 0.0;
    for (double v : t) {
        sum += std::exp(v - top);
    }
    return top + std::log(sum) - std::log(static_cast<double>(t.size()));
}

Tensor2D critic_pairs(const Tensor2D& a, const Tensor2D& b, std::span<const std::size_t> perm) {
    require(a.rows() == b.rows() && perm.size() == a.rows(), "critic_pairs: row mismatch");
    const std::size_t n = a.rows();
    const std::size_t da = a.cols();
    const std::size_t db = b.cols();
    Tensor2D out(2 * n, da + db);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < da; ++j) {
            out(i, j) = a(i, j);
            out(n + i, j) = a(i, j);
        }
        for (std::size_t j = 0; j < db; ++j) {
            out(i, da + j) = b(i, j);
            out(n + i, da + j) = b(perm[i], j);
        }
    }
    return out;
}

namespace {

struct BoundParts {
    double bound = 0.0;
    /// dBound/dT for the joint rows then the marginal rows.
    Tensor2D grad_t;
};

BoundParts bound_from_scores(const Tensor2D& scores, std::size_t n) {
    std::vector<double> marginal(n);
    double joint = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        joint += scores(i, 0);
        marginal[i] = scores(n + i, 0);
    }
    joint /= static_cast<double>(n);
    const double lme = log_mean_exp(marginal);
    BoundParts parts;
    parts.bound = joint - lme;
    parts.grad_t = Tensor2D(2 * n, 1);
    // d/dt_i of log mean exp is the softmax weight of t_i.
    const double top = *std::max_element(marginal.begin(), marginal.end());
    double z = 0.0;
    for (double v : marginal) {
        z += std::exp(v - top);
    }
    for (std::size_t i = 0; i < n; ++i) {
        parts.grad_t(i, 0) = 1.0 / static_cast<double>(n);
        parts.grad_t(n + i, 0) = -std::exp(marginal[i] - top) / z;
    }
    return parts;
}

} // namespace

double dv_bound(const numcore::MlpState& critic, const Tensor2D& a, const Tensor2D& b,
                std::span<const std::size_t> perm) {
    const Tensor2D scores = numcore::forward(critic, critic_pairs(a, b, perm)).predictions;
    return bound_from_scores(scores, a.rows()).bound;
}

DvGradient dv_bound_input_grad(const numcore::MlpState& critic, const Tensor2D& a, const Tensor2D& b,
                               std::span<const std::size_t> perm) {
    const std::size_t n = a.rows();
    const auto trace = numcore::forward_trace(critic, critic_pairs(a, b, perm));
    const BoundParts parts = bound_from_scores(trace.output, n);
    Tensor2D g_pairs;
    numcore::backward_from(critic, trace, parts.grad_t, &g_pairs);
    DvGradient out;
    out.bound = parts.bound;
    out.grad_a = Tensor2D(n, a.cols());
    out.grad_b = Tensor2D(n, b.cols());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            out.grad_a(i, j) = g_pairs(i, j) + g_pairs(n + i, j);
        }
        for (std::size_t j = 0; j < b.cols(); ++j) {
            out.grad_b(i, j) += g_pairs(i, a.cols() + j);
            out.grad_b(perm[i], j) += g_pairs(n + i, a.cols() + j);
        }
    }
    return out;
}

double critic_ascent_step(MiCritic& critic, const Tensor2D& a, const Tensor2D& b,
                          std::span<const std::size_t> perm) {
    const auto trace = numcore::forward_trace(critic.net, critic_pairs(a, b, perm));
    BoundParts parts = bound_from_scores(trace.output, a.rows());
    // Ascent on the bound is descent on its negative.
    for (double& g : parts.grad_t.values()) {
        g = -g;
    }
    const auto grads = numcore::backward_from(critic.net, trace, parts.grad_t);
    numcore::optimizer_step(critic.net, critic.optimizer, grads);
    return parts.bound;
}

double mi_estimate_dv(const Tensor2D& a, const Tensor2D& b, MiCritic& critic, std::size_t steps,
                      const MiEstimateOptions& options) {
    require(a.rows() == b.rows(), "mi_estimate_dv: sample count mismatch");
    require(a.rows() >= kMinMiSamples, "mi_estimate_dv: need at least 64 samples");
    require(critic.net.input_dim() == a.cols() + b.cols(), "mi_estimate_dv: critic width mismatch");
    require(options.batch_size >= 2, "mi_estimate_dv: batch size must be at least 2");
    const std::size_t n = a.rows();
    const std::size_t batch = std::min(options.batch_size, n);
    numcore::Rng rng = numcore::make_rng({options.seed, 0x4D49ULL});
    std::vector<std::size_t> order = numcore::permutation(n, rng);
    std::size_t cursor = 0;
    std::vector<std::size_t> rows(batch);
    for (std::size_t s = 0; s < steps; ++s) {
        if (cursor + batch > n) {
            order = numcore::permutation(n, rng);
            cursor = 0;
        }
        std::copy(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                  order.begin() + static_cast<std::ptrdiff_t>(cursor + batch), rows.begin());
        cursor += batch;
        const Tensor2D ba = select_rows(a, rows);
        const Tensor2D bb = select_rows(b, rows);
        const auto perm = numcore::permutation(batch, rng);
        critic_ascent_step(critic, ba, bb, perm);
    }
    const auto perm = numcore::permutation(n, rng);
    const double bound = dv_bound(critic.net, a, b, perm);
    if (!std::isfinite(bound)) {
        throw NumericError("mutual information estimate is not finite");
    }
    return bound;
}

} // namespace cfkd::interpret
