#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace spider {

inline constexpr std::size_t no_offset = static_cast<std::size_t>(-1);

// Bad configuration: unknown key, out-of-range value, malformed expression.
// `pointer` is a JSON pointer to the offending value (may be empty), `inner_offset`
// a byte offset inside that value's string (expressions), or no_offset.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what, std::string pointer = {}, std::size_t inner_offset = no_offset)
        : std::runtime_error(what), pointer_(std::move(pointer)), inner_offset_(inner_offset) {}

    const std::string& pointer() const { return pointer_; }
    std::size_t inner_offset() const { return inner_offset_; }

private:
    std::string pointer_;
    std::size_t inner_offset_;
};

class ParseError : public ConfigError {
public:
    ParseError(std::size_t offset, std::vector<std::string> expected, const std::string& message);

    std::size_t offset() const { return inner_offset(); }
    const std::vector<std::string>& expected() const { return expected_; }
    const std::string& message() const { return message_; }

private:
    std::vector<std::string> expected_;
    std::string message_;
};

// Numerical failure at run time (division by zero, non-finite value, singular system).
class EvalError : public std::runtime_error {
public:
    explicit EvalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace spider
