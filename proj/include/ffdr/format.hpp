#pragma once

#include <charconv>
#include <string>

namespace ffdr {

// %g-style rendering via to_chars: locale-independent, trailing zeros
// stripped (2.0 -> "2").
inline std::string format_real(double value, int precision = 12) {
    char buf[64];
    const auto res =
        std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, precision);
    return std::string(buf, res.ptr);
}

// Shortest representation that parses back to the same double.
inline std::string format_real_exact(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

} // namespace ffdr
