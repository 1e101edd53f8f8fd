#pragma once

#include <stdexcept>
#include <string>

namespace vpq {

// Precondition / contract breach: bad shapes, out-of-range ids, invalid windows.
struct ContractError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Unusable configuration: unknown keys, impossible settings, empty stores.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Broken input data: parse failures, hash mismatches, unsupported versions.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite losses, targets, or gradients during training.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace vpq
