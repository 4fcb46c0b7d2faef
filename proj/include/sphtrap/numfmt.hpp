#pragma once

#include <string>
#include <string_view>

namespace sphtrap {

/// Round-trip-safe text for a double with 17 significant digits, general
/// notation, independent of the global locale.
std::string format_double(double value);

/// Shortest text that parses back to the same double.
std::string format_shortest(double value);

/// Parses the whole of `text` as a double (locale independent).
/// Throws std::invalid_argument if anything is left over.
double parse_double(std::string_view text);

/// Parses the whole of `text` as a base-10 int.
int parse_int(std::string_view text);

} // namespace sphtrap
