#pragma once

#include <stdexcept>
#include <string>

namespace areaflux {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : Error {
    using Error::Error;
};

struct QuadratureFailure : Error {
    using Error::Error;
};

struct WeightZeroError : Error {
    using Error::Error;
};

struct TruncationError : Error {
    using Error::Error;
};

struct StiffnessError : Error {
    using Error::Error;
};

struct ConvergenceError : Error {
    using Error::Error;
};

// Parse failure; carries the byte offset of the offending token.
struct SyntaxError : Error {
    std::size_t offset;
    SyntaxError(const std::string& msg, std::size_t off)
        : Error(msg + " (at offset " + std::to_string(off) + ")"), offset(off) {}
};

// Evaluation hit a real-domain violation (log of a negative number, 0/0, ...).
struct EvalDomainError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace areaflux
