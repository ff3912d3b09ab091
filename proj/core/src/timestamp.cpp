#include "fqs/timestamp.hpp"

#include <chrono>
#include <charconv>

#include <fmt/format.h>

#include "fqs/error.hpp"

namespace fqs {

namespace {

int parse_fixed(std::string_view text, std::size_t pos, std::size_t len, std::string_view whole) {
    int value = 0;
    const char* first = text.data() + pos;
    const char* last = first + len;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        fail(ErrorKind::Parse, fmt::format("malformed timestamp '{}'", whole));
    }
    return value;
}

void expect_char(std::string_view text, std::size_t pos, char c) {
    if (text[pos] != c) {
        fail(ErrorKind::Parse, fmt::format("malformed timestamp '{}'", text));
    }
}

}  // namespace

HourStamp parse_timestamp(std::string_view text, bool allow_date_only) {
    using namespace std::chrono;

    const bool date_only = allow_date_only && text.size() == 10;
    if (!date_only && text.size() != 20) {
        fail(ErrorKind::Parse, fmt::format("malformed timestamp '{}'", text));
    }
    expect_char(text, 4, '-');
    expect_char(text, 7, '-');
    const int y = parse_fixed(text, 0, 4, text);
    const int mo = parse_fixed(text, 5, 2, text);
    const int d = parse_fixed(text, 8, 2, text);
    int h = 0;
    if (!date_only) {
        expect_char(text, 10, 'T');
        expect_char(text, 13, ':');
        expect_char(text, 16, ':');
        expect_char(text, 19, 'Z');
        h = parse_fixed(text, 11, 2, text);
        const int mi = parse_fixed(text, 14, 2, text);
        const int s = parse_fixed(text, 17, 2, text);
        if (mi != 0 || s != 0) {
            fail(ErrorKind::Parse, fmt::format("timestamp '{}' is not on the hourly grid", text));
        }
        if (h > 23) {
            fail(ErrorKind::Parse, fmt::format("malformed timestamp '{}'", text));
        }
    }
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) {
        fail(ErrorKind::Parse, fmt::format("invalid calendar date in '{}'", text));
    }
    const auto days = sys_days{ymd}.time_since_epoch().count();
    return HourStamp{static_cast<std::int64_t>(days) * 24 + h};
}

namespace {

std::chrono::year_month_day to_ymd(HourStamp t, int& hour_of_day) {
    using namespace std::chrono;
    std::int64_t days = t.hours / 24;
    std::int64_t rem = t.hours % 24;
    if (rem < 0) {
        rem += 24;
        --days;
    }
    hour_of_day = static_cast<int>(rem);
    return year_month_day{sys_days{std::chrono::days{days}}};
}

}  // namespace

std::string format_timestamp(HourStamp t) {
    int hod = 0;
    const auto ymd = to_ymd(t, hod);
    return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:00:00Z", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), hod);
}

Fingerprint fingerprint(HourStamp t) {
    int hod = 0;
    const auto ymd = to_ymd(t, hod);
    return Fingerprint{hod + 1, static_cast<int>(static_cast<unsigned>(ymd.day())),
                       static_cast<int>(static_cast<unsigned>(ymd.month()))};
}

}  // namespace fqs
