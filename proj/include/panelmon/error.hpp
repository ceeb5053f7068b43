#pragma once

#include <stdexcept>
#include <string>

namespace panelmon {

/// Base of all library errors. Each kind maps to a process exit code.
class Error : public std::runtime_error {
public:
    Error(const std::string& what, int code) : std::runtime_error(what), code_(code) {}
    int exit_code() const noexcept { return code_; }

private:
    int code_;
};

/// Invalid parameters, presets or option combinations.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what, 2) {}
};

/// Malformed or insufficient input data.
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(what, 3) {}
};

/// A numerical procedure failed to converge or hit a degenerate case.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(what, 4) {}
};

}  // namespace panelmon
