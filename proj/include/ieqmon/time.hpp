#pragma once

#include <cstdint>
#include <string>

namespace ieqmon {

/// Whole seconds since the Unix epoch (UTC).
using UnixSeconds = std::int64_t;

inline constexpr UnixSeconds kSecondsPerDay = 86400;

/// Day index since the epoch; floor division so negative times land on the right day.
constexpr std::int64_t day_index(UnixSeconds ts) {
  return ts >= 0 ? ts / kSecondsPerDay : -((-ts + kSecondsPerDay - 1) / kSecondsPerDay);
}

/// YYYY-MM-DD for the given day index.
std::string format_date(std::int64_t day);

/// ISO-8601 UTC, e.g. 2024-01-01T00:05:00Z.
std::string format_timestamp(UnixSeconds ts);

/// Inverse of format_date. Throws ConfigError on malformed input.
std::int64_t parse_date(const std::string& text);

}  // namespace ieqmon
