#pragma once

#include <iostream>
#include <stdexcept>
#include <string>

namespace tsn {

// Configuration problems: bad arguments, inconsistent pipeline wiring,
// malformed config files.  The CLI maps these to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Data problems: unreadable files, degenerate or insufficient data.
// The CLI maps these to exit code 3.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TooFewUsers : DataError {
    using DataError::DataError;
};
struct PeriodTooShort : DataError {
    using DataError::DataError;
};
struct NoUsableWindows : DataError {
    using DataError::DataError;
};
struct TooFewSamples : DataError {
    using DataError::DataError;
};
struct EmptyCluster : DataError {
    using DataError::DataError;
};
struct DataUnreadable : DataError {
    using DataError::DataError;
};
struct MissingResults : DataError {
    using DataError::DataError;
};

struct MissingContext : ConfigError {
    using ConfigError::ConfigError;
};
struct ZeroScale : ConfigError {
    using ConfigError::ConfigError;
};
struct BadKernel : ConfigError {
    using ConfigError::ConfigError;
};
struct ShapeMismatch : ConfigError {
    using ConfigError::ConfigError;
};
struct DimensionMismatch : ConfigError {
    using ConfigError::ConfigError;
};
struct InconsistentPipeline : ConfigError {
    using ConfigError::ConfigError;
};
struct ConfigInvalid : ConfigError {
    using ConfigError::ConfigError;
};

// Non-fatal conditions (degenerate statistics, fallback contexts) are
// reported here instead of throwing.
inline void warn(const std::string& msg) {
    std::cerr << "warning: " << msg << "\n";
}

}  // namespace tsn
