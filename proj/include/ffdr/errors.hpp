#pragma once

#include <stdexcept>
#include <string>

namespace ffdr {

// Raised when an argument violates a documented precondition.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Raised when external input (CSV files) cannot be parsed; the message
// names the offending line where one is known.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace ffdr
