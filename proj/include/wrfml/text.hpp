#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wrfml::text {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

std::optional<double> parse_double(std::string_view cell);
std::optional<long long> parse_int(std::string_view cell);

std::string_view trim(std::string_view s);

/// Splits one CSV line on commas. Quoting is not supported; the toolkit's
/// schemas never need it.
std::vector<std::string_view> split_csv_line(std::string_view line);

/// 64-bit FNV-1a, rendered as 16 hex digits by `hex_digest`.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex_digest(std::uint64_t hash);

} // namespace wrfml::text
