#pragma once

#include <stdexcept>
#include <string>

namespace tactsim {

/// File, format, or missing-input failures. CLI maps these to exit code 2.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerical failures (singular systems, diverging optimization). Exit code 3.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Configuration file problems, with the offending line when known.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg, int line_no = 0)
        : std::runtime_error(line_no > 0 ? msg + " (line " + std::to_string(line_no) + ")" : msg),
          line(line_no) {}
    int line;
};

}  // namespace tactsim
