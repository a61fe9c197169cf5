#include "cfkd/dataio/metrics.hpp"

#include "cfkd/errors.hpp"

#include <cmath>
#include <string>

namespace cfkd::dataio {

namespace {

void check_pair(std::span<const double> y, std::span<const double> y_hat, const char* name) {
    require(y.size() == y_hat.size(), std::string(name) + ": length mismatch (" + std::to_string(y.size()) +
                                          " vs " + std::to_string(y_hat.size()) + ")");
    require(!y.empty(), std::string(name) + ": empty input");
}

} // namespace

double mse(std::span<const double> y, std::span<const double> y_hat) {
    check_pair(y, y_hat, "mse");
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = y[i] - y_hat[i];
        sum += r * r;
    }
    return sum / static_cast<double>(y.size());
}

double mape(std::span<const double> y, std::span<const double> y_hat) {
    check_pair(y, y_hat, "mape");
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == 0.0) {
            throw DomainError("mape: label " + std::to_string(i) + " is zero");
        }
        sum += std::abs((y[i] - y_hat[i]) / y[i]);
    }
    return sum / static_cast<double>(y.size()) * 100.0;
}

} // namespace cfkd::dataio
