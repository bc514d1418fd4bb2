#pragma once

#include <stdexcept>
#include <string>

namespace orient {

/// Failure inside a processing stage (exit code 2 territory for the CLI).
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Unusable input: missing/malformed files, degenerate clouds, bad parameters.
struct InputError : Error {
    explicit InputError(const std::string& msg) : Error(msg) {}
};

}  // namespace orient
