#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace keystep {

// Base for all errors raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or invalid input data. Carries a 1-based line number when the
// data came from a line-oriented file.
class DataError : public Error {
public:
    explicit DataError(const std::string& message, std::optional<std::size_t> line = std::nullopt)
        : Error(line ? "line " + std::to_string(*line) + ": " + message : message), line_(line) {}

    std::optional<std::size_t> line() const { return line_; }

private:
    std::optional<std::size_t> line_;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace keystep
