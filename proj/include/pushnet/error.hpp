#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pushnet {

// Machine-readable error categories. The CLI maps each one to a distinct
// exit code and prints the name on stderr.
enum class ErrorCategory {
    Parse,
    Domain,
    Config,
    Numerical,
    Io,
};

inline std::string_view category_name(ErrorCategory c) noexcept {
    switch (c) {
        case ErrorCategory::Parse: return "parse";
        case ErrorCategory::Domain: return "domain";
        case ErrorCategory::Config: return "config";
        case ErrorCategory::Numerical: return "numerical";
        case ErrorCategory::Io: return "io";
    }
    return "unknown";
}

inline int exit_code(ErrorCategory c) noexcept {
    switch (c) {
        case ErrorCategory::Parse: return 3;
        case ErrorCategory::Domain: return 4;
        case ErrorCategory::Config: return 5;
        case ErrorCategory::Numerical: return 6;
        case ErrorCategory::Io: return 7;
    }
    return 1;
}

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error(ErrorCategory::Parse, "line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(ErrorCategory::Domain, what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorCategory::Config, what) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(ErrorCategory::Numerical, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorCategory::Io, what) {}
};

} // namespace pushnet
