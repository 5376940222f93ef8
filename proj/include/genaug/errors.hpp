#pragma once

#include <stdexcept>
#include <string>

namespace genaug {

// Thrown for bad user input: malformed files, invalid parameters, shape
// mismatches. Maps to CLI exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when a computation produces non-finite values. Maps to CLI exit
// code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace genaug
