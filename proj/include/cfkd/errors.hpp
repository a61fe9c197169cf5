#pragma once

#include <stdexcept>
#include <string>

namespace cfkd {

/// Violated precondition or shape contract. The CLI maps it to exit code 2.
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Invalid model or experiment configuration.
class ConfigError : public ContractError {
public:
    using ContractError::ContractError;
};

/// Input outside a function's mathematical domain (e.g. a zero label in MAPE).
class DomainError : public ContractError {
public:
    using ContractError::ContractError;
};

/// A numerical result became NaN or infinite.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be read, written or parsed. The CLI maps it to exit code 3.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) {
        throw ContractError(message);
    }
}

} // namespace cfkd
