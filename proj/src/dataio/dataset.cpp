#include "cfkd/dataio/dataset.hpp"

#include "cfkd/errors.hpp"

namespace cfkd::dataio {

const std::array<std::string_view, kFeatureCount>& feature_names() {
    static const std::array<std::string_view, kFeatureCount> names = {
        "age",        "bmi",       "smoking",    "pack_years", "sex",         "hf",  "cvd",
        "diabetes",   "depression", "asthma",    "emphysema",  "concomitant", "eos", "bdr"};
    return names;
}

std::string to_string(Fidelity f) {
    return f == Fidelity::High ? "high" : "low";
}

Fidelity fidelity_from_string(const std::string& s) {
    if (s == "high" || s == "High") {
        return Fidelity::High;
    }
    if (s == "low" || s == "Low") {
        return Fidelity::Low;
    }
    throw ContractError("unknown fidelity '" + s + "' (expected high or low)");
}

int treatment_number(TreatmentKind t) {
    return static_cast<int>(t);
}

TreatmentKind treatment_from_number(int n) {
    if (n < 0 || n > 4) {
        throw ContractError("treatment must be 0..4, got " + std::to_string(n));
    }
    return static_cast<TreatmentKind>(n);
}

FidelityDataset FidelityDataset::subset(std::span<const std::size_t> indices) const {
    FidelityDataset out;
    out.features = numcore::select_rows(features, indices);
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) {
        out.labels.push_back(labels[i]);
    }
    out.fidelity = fidelity;
    out.treatment = treatment;
    return out;
}

void validate(const FidelityDataset& ds) {
    require(ds.features.cols() == kFeatureCount || ds.empty(),
            "dataset: expected " + std::to_string(kFeatureCount) + " feature columns");
    require(ds.features.rows() == ds.labels.size(), "dataset: feature rows and label count differ");
}

} // namespace cfkd::dataio
