#include "iclbench/numeric_format.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fmt/format.h>

namespace iclbench {

namespace {

// Adds one unit to the last digit of a string of decimal digits, carrying left.
void increment_digits(std::string& digits)
{
    for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
        if (*it == '9') {
            *it = '0';
        } else {
            ++*it;
            return;
        }
    }
    digits.insert(digits.begin(), '1');
}

} // namespace

double round2(double value)
{
    if (!std::isfinite(value)) {
        return value;
    }
    char buf[512];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed);
    std::string text(buf, res.ptr);

    bool negative = false;
    if (!text.empty() && text.front() == '-') {
        negative = true;
        text.erase(text.begin());
    }
    const auto dot = text.find('.');
    std::string int_part = dot == std::string::npos ? text : text.substr(0, dot);
    std::string frac_part = dot == std::string::npos ? std::string{} : text.substr(dot + 1);
    if (frac_part.size() <= 2) {
        return value;
    }

    const bool round_up = frac_part[2] >= '5';
    std::string digits = int_part + frac_part.substr(0, 2);
    if (round_up) {
        increment_digits(digits);
    }
    std::string rounded = digits.substr(0, digits.size() - 2) + "." + digits.substr(digits.size() - 2);
    if (negative) {
        rounded.insert(rounded.begin(), '-');
    }
    return std::strtod(rounded.c_str(), nullptr);
}

std::string format_value(double value)
{
    const double r = round2(value);
    if (r == 0.0) {
        return "0";
    }
    if (std::nearbyint(r) == r && std::fabs(r) < 1e15) {
        return fmt::format("{:.0f}", r);
    }
    return fmt::format("{:.2f}", r);
}

std::string format_shortest(double value)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

} // namespace iclbench
