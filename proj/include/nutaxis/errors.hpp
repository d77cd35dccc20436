#pragma once

#include <stdexcept>
#include <string>

namespace nutaxis {

// Base class for every error thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GridError : Error {
    using Error::Error;
};

// Configuration parse/validation failure; carries the 1-based source line
// when the failure is addressable to one (-1 otherwise).
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg, int line_no = -1)
        : Error(line_no > 0 ? msg + " (line " + std::to_string(line_no) + ")" : msg),
          line(line_no) {}
    int line;
};

struct SnapshotError : Error {
    enum class Kind { Io, BadMagic, Truncated, DimMismatch, Malformed };
    SnapshotError(Kind k, const std::string& msg) : Error(msg), kind(k) {}
    Kind kind;
};

// Time step produced negativity beyond tolerance; caller may shrink dt.
struct CflError : Error {
    using Error::Error;
};

// Linear solve did not converge.
struct SolveError : Error {
    using Error::Error;
};

// Parameters fall outside every regime with a proven large-time limit.
struct NotPredictedError : Error {
    using Error::Error;
};

struct UsageError : Error {
    using Error::Error;
};

} // namespace nutaxis
