#pragma once

#include <stdexcept>
#include <string>

namespace hybridface {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// file missing or unreadable
struct IoError : Error {
    using Error::Error;
};

// malformed file content (bad magic, bad manifest directive, bad model section)
struct FormatError : Error {
    using Error::Error;
};

// payload shorter than the header promises
struct LengthError : Error {
    using Error::Error;
};

// pixel depth outside 8-bit range
struct UnsupportedDepthError : Error {
    using Error::Error;
};

// dimension mismatch between operands
struct ShapeError : Error {
    using Error::Error;
};

// invalid argument or configuration value
struct ParamError : Error {
    using Error::Error;
};

// matrix not symmetric within tolerance
struct SymmetryError : Error {
    using Error::Error;
};

// iterative method hit its cap without converging
struct ConvergenceError : Error {
    using Error::Error;
};

// singular or ill-conditioned matrix; message carries the pivot magnitude
struct SingularError : Error {
    using Error::Error;
};

// data covariance has no full-rank inverse square root
struct RankError : Error {
    using Error::Error;
};

// learning blew up (weights or error out of range)
struct DivergenceError : Error {
    using Error::Error;
};

// training data carries no usable variation
struct DegenerateDataError : Error {
    using Error::Error;
};

// model file version not understood
struct VersionError : Error {
    using Error::Error;
};

// loaded model violates a structural invariant
struct ValidationError : Error {
    using Error::Error;
};

// inconsistent cross-module configuration (e.g. mismatched class sets)
struct ConfigError : Error {
    using Error::Error;
};

} // namespace hybridface
