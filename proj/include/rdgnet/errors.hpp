#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rdgnet {

// Input could not be read or does not describe a valid graph. Maps to CLI exit code 2.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
public:
    ParseError(std::size_t line, const std::string& what)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// A name that is not present in a frozen vocabulary.
class ResolutionError : public DataError {
public:
    using DataError::DataError;
};

// NaN/Inf in a forward or backward pass. Maps to CLI exit code 3.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid option values or inconsistent configuration. Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace rdgnet
