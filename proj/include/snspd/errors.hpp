#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace snspd {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Circuit topology cannot be integrated as an ODE (C_p = 0 or L_k = 0).
class DegenerateTopologyError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A linear solve or conversion hit a singular quantity.
class SingularError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// NaN, Inf or unphysical state produced during time stepping.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text; carries the 1-based line number.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Invalid or unknown configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace snspd
