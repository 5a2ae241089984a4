#pragma once

#include <cstdint>
#include <string>

namespace alaas::core {

// Wall-clock UTC, second precision.
std::int64_t now_unix_seconds();

// Wall-clock UTC, millisecond precision.
std::int64_t now_unix_millis();

// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_utc(std::int64_t unix_seconds);

// Inverse of format_utc. Throws Error(InvalidValue) on malformed input.
std::int64_t parse_utc(const std::string& text);

}  // namespace alaas::core
