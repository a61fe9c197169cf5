#include "cfkd/harness/grid.hpp"

#include "cfkd/dataio/metrics.hpp"
#include "cfkd/dataio/sampling.hpp"
#include "cfkd/errors.hpp"
#include "cfkd/numcore/random.hpp"

#include <cmath>
#include <limits>

namespace cfkd::harness {

using dataio::TreatmentKind;
using numcore::Activation;

std::vector<std::size_t> halving_widths(std::size_t first, std::size_t depth) {
    std::vector<std::size_t> widths;
    std::size_t w = first;
    for (std::size_t i = 0; i < depth; ++i) {
        widths.push_back(std::max<std::size_t>(w, 16));
        w /= 2;
    }
    return widths;
}

GridSpace reference_grid(TreatmentKind treatment) {
    const MethodConfig base = reference_config(Method::Hf, treatment);
    GridSpace space;
    for (std::size_t depth : {5, 6, 7}) {
        for (std::size_t first : {512, 256, 128}) {
            for (Activation act : {Activation::ReLU, Activation::LeakyReLU}) {
                for (std::size_t batch : {16, 32, 64}) {
                    for (double lr : {0.01, 0.001, 0.0001}) {
                        space.teacher.push_back({halving_widths(first, depth), act, batch, lr});
                    }
                }
            }
        }
    }
    const std::vector<double> rates{0.01, 0.001};
    auto with = [&](Method m, double lr) {
        MethodConfig c = reference_config(m, treatment);
        c.learning_rate = lr;
        c.batch_size = base.batch_size;
        return c;
    };
    for (Method m : {Method::Hf, Method::Mfdf, Method::Cfkd, Method::CfkdNoTeacherOutput,
                     Method::CfkdNoTeacherFeature, Method::CfkdNoInput}) {
        auto& list = space.methods[m];
        for (std::size_t depth = 2; depth <= 6; ++depth) {
            for (std::size_t first : {256, 128, 64, 32}) {
                for (double lr : rates) {
                    MethodConfig c = with(m, lr);
                    c.hidden = halving_widths(first, depth);
                    if (m == Method::Hf || m == Method::Mfdf) {
                        list.push_back(c);
                        continue;
                    }
                    for (std::size_t aligned : {16, 32}) {
                        c.aligned_dim = aligned;
                        list.push_back(c);
                    }
                }
            }
        }
    }
    for (double lr : rates) {
        for (std::size_t u : {1, 2}) {
            MethodConfig c = with(Method::Pft, lr);
            c.unfrozen = u;
            space.methods[Method::Pft].push_back(c);
            for (std::size_t ua : {1, 2}) {
                MethodConfig t = with(Method::Mftlnn, lr);
                t.unfrozen = u;
                t.unfrozen_autoencoder = ua;
                space.methods[Method::Mftlnn].push_back(t);
            }
        }
    }
    for (double beta : {100.0, 500.0, 1000.0}) {
        for (std::size_t d : {8, 16, 32}) {
            MethodConfig c = reference_config(Method::Icfkd, treatment);
            c.beta = beta;
            c.vector_dim = d;
            space.methods[Method::Icfkd].push_back(c);
        }
    }
    return space;
}

void validate(const GridSpace& space) {
    require(!space.teacher.empty(), "grid: empty teacher candidate list");
    require(!space.methods.empty(), "grid: no method candidate lists");
    for (const auto& [m, list] : space.methods) {
        require(!list.empty(), "grid: empty candidate list for " + method_key(m));
    }
}

GridOutcome grid_search(std::size_t candidate_count, std::size_t n, std::size_t k, std::uint64_t seed,
                        const FoldScore& score, std::span<const std::size_t> parameters,
                        std::span<const double> learning_rates) {
    require(candidate_count > 0, "grid search: empty candidate space");
    require(k >= 2, "grid search: need at least two folds");
    require(n >= k, "grid search: dataset smaller than the fold count");
    require(parameters.size() == candidate_count && learning_rates.size() == candidate_count,
            "grid search: per-candidate metadata size mismatch");
    const auto plan = dataio::kfold(n, k, seed);
    GridOutcome out;
    for (std::size_t c = 0; c < candidate_count; ++c) {
        CandidateScore row{c, {}, 0.0, parameters[c], learning_rates[c]};
        double sum = 0.0;
        for (std::size_t f = 0; f < k; ++f) {
            const auto train = plan.training_indices(f);
            double v;
            try {
                v = score(c, train, plan.folds[f]);
            } catch (const NumericError&) {
                v = std::numeric_limits<double>::infinity();
            }
            if (!std::isfinite(v)) {
                v = std::numeric_limits<double>::infinity();
            }
            row.fold_mse.push_back(v);
            sum += v;
        }
        row.mean_mse = sum / static_cast<double>(k);
        out.table.push_back(std::move(row));
    }
    auto better = [](const CandidateScore& a, const CandidateScore& b) {
        if (a.mean_mse != b.mean_mse) {
            return a.mean_mse < b.mean_mse;
        }
        if (a.parameters != b.parameters) {
            return a.parameters < b.parameters;
        }
        if (a.learning_rate != b.learning_rate) {
            return a.learning_rate < b.learning_rate;
        }
        return a.candidate < b.candidate;
    };
    for (std::size_t c = 1; c < candidate_count; ++c) {
        if (better(out.table[c], out.table[out.best])) {
            out.best = c;
        }
    }
    return out;
}

GridResult<MethodConfig> grid_search(const std::vector<MethodConfig>& candidates, const Upstream& upstream,
                                     const dataio::FidelityDataset& dataset_h, std::size_t k, std::uint64_t seed) {
    std::vector<std::size_t> params;
    std::vector<double> rates;
    for (const auto& c : candidates) {
        params.push_back(trainable_parameter_count(c, upstream));
        rates.push_back(c.learning_rate);
    }
    const FoldScore score = [&](std::size_t c, std::span<const std::size_t> train, std::span<const std::size_t> val) {
        const auto train_ds = dataset_h.subset(train);
        const auto val_ds = dataset_h.subset(val);
        const auto model = train_method(candidates[c], upstream, train_ds, numcore::derive_seed({seed, train.size()}));
        return dataio::mse(val_ds.labels, predict(model, val_ds.features));
    };
    auto outcome = grid_search(candidates.size(), dataset_h.size(), k, seed, score, params, rates);
    return {candidates.at(outcome.best), std::move(outcome)};
}

GridResult<TeacherConfig> grid_search(const std::vector<TeacherConfig>& candidates,
                                      const dataio::FidelityDataset& dataset_l, std::size_t k, std::uint64_t seed) {
    std::vector<std::size_t> params;
    std::vector<double> rates;
    for (const auto& c : candidates) {
        params.push_back(models::regressor_spec(c.hidden, c.activation, 0).parameter_count());
        rates.push_back(c.learning_rate);
    }
    const FoldScore score = [&](std::size_t c, std::span<const std::size_t> train, std::span<const std::size_t> val) {
        const auto train_ds = dataset_l.subset(train);
        const auto val_ds = dataset_l.subset(val);
        const auto model = train_teacher(train_ds, candidates[c], numcore::derive_seed({seed, train.size()}));
        return dataio::mse(val_ds.labels, models::predict(model, val_ds.features));
    };
    auto outcome = grid_search(candidates.size(), dataset_l.size(), k, seed, score, params, rates);
    return {candidates.at(outcome.best), std::move(outcome)};
}

nlohmann::json to_json(const GridOutcome& outcome) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : outcome.table) {
        rows.push_back({{"candidate", r.candidate},
                        {"fold_mse", r.fold_mse},
                        {"mean_mse", std::isfinite(r.mean_mse) ? nlohmann::json(r.mean_mse) : nlohmann::json(nullptr)},
                        {"parameters", r.parameters},
                        {"learning_rate", r.learning_rate}});
    }
    return {{"best", outcome.best}, {"table", rows}};
}

} // namespace cfkd::harness
