#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace radius {

// Raised when a value violates a documented invariant. `field()` names the
// offending parameter so config errors can be reported by key.
class ValidationError : public std::invalid_argument {
public:
    ValidationError(std::string field, const std::string& message)
        : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// Malformed text input. Line numbers are 1-based; 0 means "whole file".
class ParseError : public std::runtime_error {
public:
    ParseError(std::string source, std::size_t line, const std::string& message)
        : std::runtime_error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " + message),
          source_(std::move(source)),
          line_(line) {}

    const std::string& source() const noexcept { return source_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string source_;
    std::size_t line_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const char* field, const std::string& message) {
    if (!ok) throw ValidationError(field, message);
}

}  // namespace detail

}  // namespace radius
