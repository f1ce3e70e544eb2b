#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace crix {

// Exit-code families used by the command line front end:
//   ConfigError / ArgumentError     -> 1
//   DataError and its subclasses    -> 2
//   NumericError and its subclasses -> 3

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DomainError : public ArgumentError {
public:
    using ArgumentError::ArgumentError;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
public:
    ParseError(std::size_t row, const std::string& what)
        : DataError("row " + std::to_string(row) + ": " + what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class IntegrityError : public DataError {
public:
    using DataError::DataError;
};

class ShortageError : public DataError {
public:
    ShortageError(std::size_t achievable, std::size_t requested, const std::string& where)
        : DataError(where + ": only " + std::to_string(achievable) + " rankable assets, " +
                    std::to_string(requested) + " requested"),
          achievable_(achievable) {}
    std::size_t achievable() const noexcept { return achievable_; }

private:
    std::size_t achievable_;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateSampleError : public NumericError {
public:
    using NumericError::NumericError;
};

class DegenerateCompositionError : public NumericError {
public:
    using NumericError::NumericError;
};

}  // namespace crix
