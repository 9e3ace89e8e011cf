#pragma once

#include <string>
#include <string_view>

namespace cardesign {

/// Shortest decimal text that parses back to the identical double.
std::string to_text(double value);

/// Full-string parse; throws ParseError on trailing garbage or empty input.
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

} // namespace cardesign
