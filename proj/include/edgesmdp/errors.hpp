#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace edgesmdp {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed state: negative count, departure of an empty class, capacity breach.
struct ModelViolation : Error {
    using Error::Error;
};

struct InfeasibleAction : Error {
    using Error::Error;
};

struct DomainError : Error {
    using Error::Error;
};

struct ShapeError : Error {
    using Error::Error;
};

struct NotIndexable : Error {
    using Error::Error;
};

struct NoFeasibleAction : Error {
    using Error::Error;
};

struct DivergenceError : Error {
    DivergenceError(const std::string& what, long long step) : Error(what), step(step) {}
    long long step;
};

struct TooLarge : Error {
    using Error::Error;
};

struct MultiChain : Error {
    using Error::Error;
};

struct SolverFailure : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// Collects every invariant breach found while validating a config, each
// prefixed with the JSON path of the offending field.
struct ConfigError : Error {
    explicit ConfigError(std::vector<std::string> issues);
    std::vector<std::string> issues;
};

}  // namespace edgesmdp
