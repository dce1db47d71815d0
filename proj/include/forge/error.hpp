#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace forge {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised when a caller-visible work limit (count cap or wall-clock budget) is hit.
class BudgetExceeded : public Error {
public:
    using Error::Error;
};

class SignatureMismatch : public Error {
public:
    using Error::Error;
};

// Formula syntax or sort errors. `position` is a byte offset into the source text
// (npos for sort errors detected after parsing).
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t position)
        : Error(message), position_(position) {}
    [[nodiscard]] std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

} // namespace forge
