#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <system_error>

#include "oilcast/errors.hpp"

namespace oilcast::detail {

// Shortest decimal that round-trips to the same double.
inline std::string format_double(double value) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

// printf %.(digits)g style, up to `digits` significant digits.
inline std::string format_double_sig(double value, int digits) {
    char buf[48];
    auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, digits);
    return std::string(buf, res.ptr);
}

// Strict full-token double parse.
inline double parse_double(std::string_view text, const std::string& context) {
    double value = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw ParseError(context + ": not a number: '" + std::string(text) + "'");
    }
    return value;
}

inline long long parse_int(std::string_view text, const std::string& context) {
    long long value = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw ParseError(context + ": not an integer: '" + std::string(text) + "'");
    }
    return value;
}

} // namespace oilcast::detail
