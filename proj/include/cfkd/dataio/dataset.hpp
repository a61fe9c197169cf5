#pragma once

#include "cfkd/numcore/tensor.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cfkd::dataio {

inline constexpr std::size_t kFeatureCount = 14;

/// Column names in dataset order, matching the CSV header.
const std::array<std::string_view, kFeatureCount>& feature_names();

enum class Fidelity { High, Low };

/// None plus the four treatment options (1..4).
enum class TreatmentKind { None = 0, DeclineReduction = 1, ExacerbationDelay = 2, ActivityBoost = 3, SymptomRelief = 4 };

std::string to_string(Fidelity f);
Fidelity fidelity_from_string(const std::string& s);
int treatment_number(TreatmentKind t);
TreatmentKind treatment_from_number(int n);

/// Fidelity-tagged (features, QALY) samples. Row i of `features` pairs with `labels[i]`.
struct FidelityDataset {
    numcore::Tensor2D features;
    std::vector<double> labels;
    Fidelity fidelity = Fidelity::High;
    TreatmentKind treatment = TreatmentKind::None;

    std::size_t size() const { return labels.size(); }
    bool empty() const { return labels.empty(); }
    numcore::Tensor2D label_column() const { return numcore::Tensor2D::column(labels); }

    FidelityDataset subset(std::span<const std::size_t> indices) const;

    friend bool operator==(const FidelityDataset&, const FidelityDataset&) = default;
};

/// Throws ContractError unless features are n x 14 with n labels.
void validate(const FidelityDataset& ds);

} // namespace cfkd::dataio
