#include "fqs/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "fqs/error.hpp"

namespace fqs {

namespace {

std::string num(double v) { return std::isfinite(v) ? fmt::format("{}", v) : std::string(); }

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

double parse_number(std::string_view cell, std::size_t line_no, std::string_view what) {
    if (cell.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
        fail(ErrorKind::Parse, fmt::format("line {}: bad {} value '{}'", line_no, what, cell));
    }
    return v;
}

bool parse_flag(std::string_view cell, std::size_t line_no) {
    if (cell == "1") {
        return true;
    }
    if (cell == "0") {
        return false;
    }
    fail(ErrorKind::Parse, fmt::format("line {}: expected 0 or 1, got '{}'", line_no, cell));
}

template <typename RowFn>
void for_each_row(std::string_view text, std::string_view expected_header, RowFn&& fn) {
    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool header = true;
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
        if (line.empty()) {
            continue;
        }
        if (header) {
            if (line != expected_header) {
                fail(ErrorKind::Parse, fmt::format("line {}: unexpected header", line_no));
            }
            header = false;
            continue;
        }
        fn(split(line), line_no);
    }
    if (header) {
        fail(ErrorKind::Parse, "missing header row");
    }
}

}  // namespace

std::string report_header() {
    std::string h = "timestamp,anomalous,score";
    for (std::size_t c = 1; c <= kTargets; ++c) {
        h += fmt::format(",ch{}_viol,ch{}_dev", c, c);
    }
    for (std::size_t c = 1; c <= kTargets; ++c) {
        h += fmt::format(",lower{},upper{}", c, c);
    }
    h += ",scored";
    return h;
}

std::string write_report_csv(std::span<const AnomalyRecord> records) {
    std::string out = report_header();
    out += '\n';
    for (const auto& r : records) {
        out += fmt::format("{},{},{}", format_timestamp(r.timestamp), r.anomalous ? 1 : 0, num(r.score));
        for (const auto& v : r.channels) {
            out += fmt::format(",{},{}", v.violated ? 1 : 0, num(v.deviation));
        }
        for (const auto& v : r.channels) {
            out += ',';
            if (r.scored) {
                out += num(v.lower);
            }
            out += ',';
            if (r.scored) {
                out += num(v.upper);
            }
        }
        out += fmt::format(",{}\n", r.scored ? 1 : 0);
    }
    return out;
}

std::vector<AnomalyRecord> parse_report_csv(std::string_view text) {
    std::vector<AnomalyRecord> records;
    const std::size_t expected = 3 + 2 * kTargets + 2 * kTargets + 1;
    for_each_row(text, report_header(), [&](const std::vector<std::string_view>& f, std::size_t line_no) {
        if (f.size() != expected) {
            fail(ErrorKind::Parse, fmt::format("line {}: expected {} fields, got {}", line_no, expected, f.size()));
        }
        AnomalyRecord r;
        try {
            r.timestamp = parse_timestamp(f[0]);
        } catch (const Error& e) {
            fail(ErrorKind::Parse, fmt::format("line {}: {}", line_no, e.what()));
        }
        r.anomalous = parse_flag(f[1], line_no);
        r.score = parse_number(f[2], line_no, "score");
        for (std::size_t c = 0; c < kTargets; ++c) {
            auto& v = r.channels[c];
            v.channel = c;
            v.violated = parse_flag(f[3 + 2 * c], line_no);
            v.deviation = parse_number(f[4 + 2 * c], line_no, "deviation");
            v.lower = parse_number(f[3 + 2 * kTargets + 2 * c], line_no, "lower bound");
            v.upper = parse_number(f[4 + 2 * kTargets + 2 * c], line_no, "upper bound");
            v.observed = std::numeric_limits<double>::quiet_NaN();
        }
        r.scored = parse_flag(f.back(), line_no);
        if (!records.empty() && !(records.back().timestamp < r.timestamp)) {
            fail(ErrorKind::Parse, fmt::format("line {}: timestamps must be strictly increasing", line_no));
        }
        records.push_back(r);
    });
    return records;
}

std::string write_plot_csv(std::span<const AnomalyRecord> records, std::size_t channel) {
    const auto lo = *quantile_index(0.01);
    const auto hi = *quantile_index(0.99);
    std::string out = "timestamp,observed,mean,q01,q99\n";
    for (const auto& r : records) {
        if (!r.scored || !r.forecast) {
            continue;
        }
        const auto& f = r.forecast->channels[channel];
        out += fmt::format("{},{},{},{},{}\n", format_timestamp(r.timestamp), num(r.channels[channel].observed),
                           num(f.mean), num(f.quantiles[lo]), num(f.quantiles[hi]));
    }
    return out;
}

std::vector<PlotRow> parse_plot_csv(std::string_view text) {
    std::vector<PlotRow> rows;
    for_each_row(text, "timestamp,observed,mean,q01,q99", [&](const std::vector<std::string_view>& f, std::size_t line_no) {
        if (f.size() != 5) {
            fail(ErrorKind::Parse, fmt::format("line {}: expected 5 fields", line_no));
        }
        PlotRow row;
        row.timestamp = parse_timestamp(f[0]);
        row.observed = parse_number(f[1], line_no, "observed");
        row.mean = parse_number(f[2], line_no, "mean");
        row.q01 = parse_number(f[3], line_no, "q01");
        row.q99 = parse_number(f[4], line_no, "q99");
        rows.push_back(row);
    });
    return rows;
}

std::string render_svg(std::span<const AnomalyRecord> records, std::span<const std::vector<PlotRow>> channels) {
    constexpr double kWidth = 1200.0;
    constexpr double kPanel = 160.0;
    constexpr double kLeft = 70.0;
    constexpr double kRight = 20.0;
    constexpr double kTop = 20.0;
    const double height = kTop + kPanel * static_cast<double>(channels.size()) + 30.0;

    HourStamp t0{std::numeric_limits<std::int64_t>::max()};
    HourStamp t1{std::numeric_limits<std::int64_t>::min()};
    for (const auto& ch : channels) {
        for (const auto& r : ch) {
            t0 = std::min(t0, r.timestamp);
            t1 = std::max(t1, r.timestamp);
        }
    }
    std::string svg = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" font-family=\"sans-serif\" "
        "font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
        kWidth, height);
    if (t1 < t0) {
        return svg + "</svg>\n";
    }
    const double span = std::max<double>(1.0, static_cast<double>(t1 - t0));
    auto x_of = [&](HourStamp t) { return kLeft + (kWidth - kLeft - kRight) * static_cast<double>(t - t0) / span; };

    double smin = std::numeric_limits<double>::infinity();
    double smax = -std::numeric_limits<double>::infinity();
    for (const auto& r : records) {
        if (r.scored && r.anomalous) {
            smin = std::min(smin, r.score);
            smax = std::max(smax, r.score);
        }
    }
    for (const auto& r : records) {
        if (!r.scored || !r.anomalous || r.timestamp < t0 || t1 < r.timestamp) {
            continue;
        }
        const double level = smax > smin ? (r.score - smin) / (smax - smin) : 1.0;
        // yellow (255,220,0) to red (220,0,0)
        const int red = static_cast<int>(255.0 - 35.0 * level);
        const int green = static_cast<int>(220.0 * (1.0 - level));
        svg += fmt::format(
            "<line x1=\"{0:.2f}\" x2=\"{0:.2f}\" y1=\"{1:.1f}\" y2=\"{2:.1f}\" stroke=\"rgb({3},{4},0)\" "
            "stroke-opacity=\"0.6\"/>\n",
            x_of(r.timestamp), kTop, kTop + kPanel * static_cast<double>(channels.size()), red, green);
    }

    for (std::size_t c = 0; c < channels.size(); ++c) {
        const auto& rows = channels[c];
        const double top = kTop + kPanel * static_cast<double>(c);
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const auto& r : rows) {
            for (const double v : {r.observed, r.q01, r.q99}) {
                if (std::isfinite(v)) {
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
            }
        }
        if (!(hi > lo)) {
            hi = lo + 1.0;
        }
        auto y_of = [&](double v) { return top + 10.0 + (kPanel - 20.0) * (hi - v) / (hi - lo); };
        svg += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"none\" "
                           "stroke=\"#999\"/>\n",
                           kLeft, top, kWidth - kLeft - kRight, kPanel - 4.0);
        svg += fmt::format("<text x=\"8\" y=\"{:.1f}\">f{} [Hz]</text>\n", top + kPanel / 2.0, c + 1);
        svg += fmt::format("<text x=\"8\" y=\"{:.1f}\">{:.3f}</text>\n", top + 14.0, hi);
        svg += fmt::format("<text x=\"8\" y=\"{:.1f}\">{:.3f}</text>\n", top + kPanel - 8.0, lo);

        std::string band = "<polygon fill=\"#9ecae1\" fill-opacity=\"0.6\" points=\"";
        for (const auto& r : rows) {
            band += fmt::format("{:.2f},{:.2f} ", x_of(r.timestamp), y_of(r.q99));
        }
        for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
            band += fmt::format("{:.2f},{:.2f} ", x_of(it->timestamp), y_of(it->q01));
        }
        svg += band + "\"/>\n";

        auto polyline = [&](auto value, std::string_view color) {
            std::string line = fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1\" points=\"", color);
            for (const auto& r : rows) {
                const double v = value(r);
                if (std::isfinite(v)) {
                    line += fmt::format("{:.2f},{:.2f} ", x_of(r.timestamp), y_of(v));
                }
            }
            return line + "\"/>\n";
        };
        svg += polyline([](const PlotRow& r) { return r.mean; }, "#08519c");
        svg += polyline([](const PlotRow& r) { return r.observed; }, "black");
    }
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n", kLeft, height - 8.0, format_timestamp(t0));
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{}</text>\n", kWidth - kRight,
                       height - 8.0, format_timestamp(t1));
    svg += "</svg>\n";
    return svg;
}

}  // namespace fqs
