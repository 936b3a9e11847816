#pragma once

#include <stdexcept>
#include <string>

namespace ctxseq {

// Shape disagreement between operands (reports both shapes).
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Token id or index outside its valid range.
struct IndexError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

// Value outside the mathematical domain of an operation (e.g. empty softmax).
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Caller broke a stateful protocol (stale cache, missing context, bad framing).
struct StateError : std::logic_error {
    using std::logic_error::logic_error;
};

// Malformed or inconsistent external data (corpus files, checkpoints).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Mismatched run configuration (vocabulary hash, model mode, dimensions).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite value where the computation requires a finite one.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace ctxseq
