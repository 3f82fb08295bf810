#pragma once

#include <stdexcept>
#include <string>

namespace shortpanel {

// Malformed input or a violated precondition (bad CSV, wrong treated count,
// nonpositive delta, ...).
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// The inputs are well formed but the computation cannot proceed
// (singular Gram matrix, all-zero moment matrix, ...).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace shortpanel
