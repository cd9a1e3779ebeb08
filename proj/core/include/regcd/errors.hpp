#pragma once

#include <stdexcept>
#include <string>

namespace regcd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Unreadable or malformed image file (bad magic, bit depth, truncation...).
class DecodeError : public Error {
public:
    using Error::Error;
};

/// Invalid user-supplied configuration (tile size, thresholds, plugin spec).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Caller violated an operation precondition (dimension mismatch, bad range).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Singular transform, point at infinity, or otherwise impossible geometry.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Tile grid cannot be assembled (missing or duplicate tile origins).
class AssemblyError : public Error {
public:
    using Error::Error;
};

/// Degenerate point configuration for a linear solve (rank deficiency).
class DegeneracyError : public Error {
public:
    using Error::Error;
};

/// Model estimation failed (too few correspondences, no consensus).
class EstimationError : public Error {
public:
    using Error::Error;
};

/// Non-finite values where finite math is required.
class NumericError : public Error {
public:
    using Error::Error;
};

/// External plugin process failed (nonzero exit, bad output).
class PluginError : public Error {
public:
    using Error::Error;
};

} // namespace regcd
