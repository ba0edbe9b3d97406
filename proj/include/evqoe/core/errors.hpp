#pragma once

#include <stdexcept>
#include <string>

namespace evqoe {

/// Invalid caller-supplied argument (bad window, empty input, degenerate parameters).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Not enough observations for the requested estimator.
class InsufficientData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An exogenous value was requested outside the span covered by its source.
class MissingExogData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input file does not match its documented schema.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace evqoe
