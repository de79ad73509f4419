#pragma once

#include <stdexcept>
#include <string>

namespace ambientflow {

enum class ErrorKind {
    InvalidCurve,
    ConvexityRequired,
    Domain,
    Construction,
    UnboundedField,
    InsufficientData,
    EstimatorInapplicable,
    MissingInput,
    InternalConsistency,
    Config,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` tells callers which contract failed.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace ambientflow
