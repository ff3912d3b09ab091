#include <algorithm>
#include <charconv>
#include <set>

#include <fmt/format.h>

#include "fqs/error.hpp"
#include "fqs/series.hpp"

namespace fqs {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
        s.remove_suffix(1);
    }
    return s;
}

}  // namespace

Series parse_csv(std::string_view text) {
    // UTF-8 byte order mark
    if (text.substr(0, 3) == "\xEF\xBB\xBF") {
        text.remove_prefix(3);
    }

    const auto& info = channel_info();
    Series series;
    std::set<HourStamp> seen;
    std::size_t line_no = 0;
    bool header_seen = false;

    std::size_t pos = 0;
    while (pos < text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string_view::npos) {
            eol = text.size();
        }
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (trim(line).empty()) {
            continue;
        }

        const auto fields = split_fields(line);
        if (!header_seen) {
            header_seen = true;
            for (std::size_t i = 0; i < fields.size(); ++i) {
                const auto name = trim(fields[i]);
                const bool known = name == "timestamp" ||
                                   std::any_of(info.begin(), info.end(), [&](const auto& ch) { return ch.name == name; });
                if (!known) {
                    fail(ErrorKind::Parse, fmt::format("line {}: unknown column '{}'", line_no, name));
                }
            }
            if (trim(line) != canonical_header()) {
                fail(ErrorKind::Parse,
                     fmt::format("line {}: header must be exactly '{}'", line_no, canonical_header()));
            }
            continue;
        }

        if (fields.size() != kFields + 1) {
            fail(ErrorKind::Parse,
                 fmt::format("line {}: malformed row, expected {} fields, got {}", line_no, kFields + 1, fields.size()));
        }

        MonitoringSample sample;
        try {
            sample = missing_sample(parse_timestamp(trim(fields[0])));
        } catch (const Error& e) {
            fail(ErrorKind::Parse, fmt::format("line {}: {}", line_no, e.what()));
        }
        for (std::size_t i = 0; i < kFields; ++i) {
            const auto cell = trim(fields[i + 1]);
            if (cell.empty()) {
                continue;
            }
            double value = 0.0;
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
            if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
                fail(ErrorKind::Parse,
                     fmt::format("line {}: malformed row, column '{}' has non-numeric value '{}'", line_no,
                                 info[i].name, cell));
            }
            sample.field(i) = value;
            sample.present.set(i);
        }
        try {
            validate_sample(sample);
        } catch (const Error& e) {
            fail(ErrorKind::Parse, fmt::format("line {}: malformed row, {}", line_no, e.what()));
        }
        if (!seen.insert(sample.timestamp).second) {
            fail(ErrorKind::Parse, fmt::format("line {}: duplicate timestamp {}", line_no,
                                               format_timestamp(sample.timestamp)));
        }
        series.samples.push_back(sample);
    }

    if (!header_seen) {
        fail(ErrorKind::Parse, "empty input: missing header row");
    }
    std::stable_sort(series.samples.begin(), series.samples.end(),
                     [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    return series;
}

std::string write_csv(const Series& series, int decimals) {
    std::string out = canonical_header();
    out += '\n';
    for (const auto& s : series.samples) {
        out += format_timestamp(s.timestamp);
        for (std::size_t i = 0; i < kFields; ++i) {
            out += ',';
            if (!s.present[i]) {
                continue;
            }
            if (decimals < 0) {
                out += fmt::format("{}", s.field(i));
            } else {
                out += fmt::format("{:.{}f}", s.field(i), decimals);
            }
        }
        out += '\n';
    }
    return out;
}

}  // namespace fqs
