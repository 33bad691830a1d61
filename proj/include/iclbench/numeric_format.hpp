#pragma once

#include <string>

namespace iclbench {

/// Rounds to 2 decimals, ties away from zero, judged on the shortest decimal
/// representation of `value` (so 0.715 -> 0.72 even though the binary double is
/// slightly below 0.715). Idempotent.
double round2(double value);

/// Prompt rendering of a value: integral values without a decimal point
/// ("95595"), everything else with exactly two decimals ("0.72"). Rounds with
/// round2 first. No thousands separators; negative zero prints as "0".
std::string format_value(double value);

/// Shortest round-trip representation. Used wherever a number is written to a
/// CSV, JSON, or SVG file and must read back to the same double.
std::string format_shortest(double value);

} // namespace iclbench
