#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dfm {

/// Shortest-safe text form of a double (17 significant digits), so parsing
/// it back yields the same bits.
std::string format_double(double v);

/// Splits on `sep`, trimming surrounding whitespace from each field.
std::vector<std::string> split_fields(std::string_view line, char sep);

/// Strict parse of a whole field; throws IoError mentioning `where`.
double parse_double(std::string_view field, std::string_view where);

} // namespace dfm
