#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace avantsatie {

// Locale-independent shortest round-trip text for a double ('.' decimal).
std::string format_number(double value);
// Fixed notation with `decimals` digits after the point.
std::string format_fixed(double value, int decimals);
// Whole-string parse, '.' decimal; nullopt on any leftover text.
std::optional<double> parse_number(std::string_view text);

// Joins already-formatted cells; quotes cells containing ',', '"' or newlines.
std::string csv_row(const std::vector<std::string>& cells);
std::vector<std::string> split_csv_line(std::string_view line);

} // namespace avantsatie
