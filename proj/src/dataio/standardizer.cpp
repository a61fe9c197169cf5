#include "cfkd/dataio/standardizer.hpp"

#include "cfkd/errors.hpp"

#include <cmath>

namespace cfkd::dataio {

using numcore::Tensor2D;

Standardizer standardize_fit(const Tensor2D& x) {
    require(x.rows() > 0, "standardize_fit: empty fit set");
    const std::size_t n = x.rows();
    const std::size_t w = x.cols();
    Standardizer s;
    s.mean.assign(w, 0.0);
    s.stddev.assign(w, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            s.mean[c] += x(r, c);
        }
    }
    for (double& m : s.mean) {
        m /= static_cast<double>(n);
    }
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            const double d = x(r, c) - s.mean[c];
            s.stddev[c] += d * d;
        }
    }
    for (double& sd : s.stddev) {
        sd = std::sqrt(sd / static_cast<double>(n));
        // Constant (or numerically constant) column.
        if (!(sd > 1e-12)) {
            sd = 1.0;
        }
    }
    return s;
}

Standardizer standardize_fit(const FidelityDataset& ds) {
    return standardize_fit(ds.features);
}

Tensor2D Standardizer::transform(const Tensor2D& x) const {
    require(x.cols() == width(), "Standardizer::transform: width mismatch");
    Tensor2D out = x;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            row[c] = (row[c] - mean[c]) / stddev[c];
        }
    }
    return out;
}

Tensor2D Standardizer::inverse_transform(const Tensor2D& z) const {
    require(z.cols() == width(), "Standardizer::inverse_transform: width mismatch");
    Tensor2D out = z;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            row[c] = row[c] * stddev[c] + mean[c];
        }
    }
    return out;
}

FidelityDataset standardize_apply(const Standardizer& s, const FidelityDataset& ds) {
    FidelityDataset out = ds;
    out.features = s.transform(ds.features);
    return out;
}

nlohmann::json to_json(const Standardizer& s) {
    return {{"mean", s.mean}, {"stddev", s.stddev}};
}

Standardizer standardizer_from_json(const nlohmann::json& j) {
    Standardizer s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.stddev = j.at("stddev").get<std::vector<double>>();
    require(s.mean.size() == s.stddev.size(), "standardizer json: mean/stddev length mismatch");
    return s;
}

} // namespace cfkd::dataio
