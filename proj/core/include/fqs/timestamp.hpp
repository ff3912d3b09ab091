#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace fqs {

/// A UTC instant on the hourly grid, stored as whole hours since 1970-01-01T00:00Z.
struct HourStamp {
    std::int64_t hours = 0;

    auto operator<=>(const HourStamp&) const = default;

    HourStamp operator+(std::int64_t h) const { return HourStamp{hours + h}; }
    HourStamp operator-(std::int64_t h) const { return HourStamp{hours - h}; }
    std::int64_t operator-(HourStamp other) const { return hours - other.hours; }
};

/// Calendar conditioning features. hour is hour-of-day + 1 (00:00 -> 1, 23:00 -> 24),
/// day is day-of-month (1-31), month is 1-12.
struct Fingerprint {
    int hour = 1;
    int day = 1;
    int month = 1;

    bool operator==(const Fingerprint&) const = default;
};

/// Parses `YYYY-MM-DDTHH:00:00Z`. Nonzero minutes or seconds are rejected.
/// Also accepts a bare date `YYYY-MM-DD` (midnight) when allow_date_only is set.
HourStamp parse_timestamp(std::string_view text, bool allow_date_only = false);

std::string format_timestamp(HourStamp t);

Fingerprint fingerprint(HourStamp t);

}  // namespace fqs
