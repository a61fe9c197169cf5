#pragma once

#include <span>

namespace cfkd::dataio {

/// (1/t)·Σ(yᵢ − ŷᵢ)²
double mse(std::span<const double> y, std::span<const double> y_hat);

/// (1/t)·Σ|(yᵢ − ŷᵢ)/yᵢ|·100. Throws DomainError on a zero label.
double mape(std::span<const double> y, std::span<const double> y_hat);

} // namespace cfkd::dataio
