#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace netdeconf {

/// Shortest decimal text that parses back to exactly `v`. NaN prints as "NA".
std::string format_double(double v);

/// Strict parsers: the whole field must be consumed. Throw FormatError with
/// `context` in the message.
double parse_double(std::string_view text, std::string_view context);
std::uint64_t parse_u64(std::string_view text, std::string_view context);

/// Splits on `sep`, keeping empty fields.
std::vector<std::string_view> split_fields(std::string_view line, char sep);
/// Splits on runs of spaces/tabs, dropping empty fields.
std::vector<std::string_view> split_whitespace(std::string_view line);

}  // namespace netdeconf
