#pragma once

#include <stdexcept>
#include <string>

namespace dqpt {

// Bad user input or a configuration that violates a type invariant.
class InvalidConfiguration : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A numerical procedure did not reach its accuracy target.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Parameters outside the range where the model is defined.
class OutOfRegime : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

}  // namespace dqpt
