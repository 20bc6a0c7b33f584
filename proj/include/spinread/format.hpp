#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace spinread {

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);

std::optional<double> parse_double(std::string_view text);
std::optional<std::int64_t> parse_int(std::string_view text);
std::optional<std::uint64_t> parse_uint(std::string_view text);

std::string_view trim(std::string_view text);

}  // namespace spinread
