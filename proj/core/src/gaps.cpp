#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "fqs/error.hpp"
#include "fqs/series.hpp"

namespace fqs {

GapPolicy::Kind parse_gap_policy(std::string_view name) {
    if (name == "linear") {
        return GapPolicy::Kind::LinearInterpolate;
    }
    if (name == "carry-forward") {
        return GapPolicy::Kind::CarryForward;
    }
    if (name == "drop-window") {
        return GapPolicy::Kind::DropWindow;
    }
    fail(ErrorKind::Config,
         fmt::format("unknown gap policy '{}' (expected linear, carry-forward or drop-window)", name));
}

namespace {

double interpolate(std::size_t field, double left, double right, double frac) {
    if (field == kTargets + kWindDir) {
        double delta = std::fmod(right - left, 360.0);
        if (delta > 180.0) {
            delta -= 360.0;
        } else if (delta < -180.0) {
            delta += 360.0;
        }
        double v = std::fmod(left + frac * delta, 360.0);
        if (v < 0.0) {
            v += 360.0;
        }
        return v >= 360.0 ? 0.0 : v;
    }
    return left + frac * (right - left);
}

}  // namespace

Series fill_gaps(const Series& series, const GapPolicy& policy) {
    if (series.size() < 2) {
        fail(ErrorKind::Data, "fill_gaps needs at least 2 samples");
    }
    if (policy.kind != GapPolicy::Kind::DropWindow && policy.max_gap_hours < 1) {
        fail(ErrorKind::Config, fmt::format("gap limit must be at least 1 hour, got {}", policy.max_gap_hours));
    }

    Series out;
    out.provenance = series.provenance;
    const auto span = series.last() - series.first();
    out.samples.reserve(static_cast<std::size_t>(span) + 1);
    for (const auto& s : series.samples) {
        if (!out.samples.empty()) {
            if (s.timestamp <= out.samples.back().timestamp) {
                fail(ErrorKind::Data, "fill_gaps needs strictly increasing timestamps");
            }
            for (auto t = out.samples.back().timestamp + 1; t < s.timestamp; t = t + 1) {
                out.samples.push_back(missing_sample(t));
            }
        }
        out.samples.push_back(s);
    }

    if (policy.kind == GapPolicy::Kind::DropWindow) {
        return out;
    }

    auto& samples = out.samples;
    const std::size_t n = samples.size();
    const auto limit = static_cast<std::size_t>(policy.max_gap_hours);
    for (std::size_t f = 0; f < kFields; ++f) {
        std::size_t i = 0;
        while (i < n) {
            if (samples[i].present[f]) {
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j < n && !samples[j].present[f]) {
                ++j;
            }
            // missing run is [i, j)
            const std::size_t len = j - i;
            const bool has_left = i > 0;
            const bool has_right = j < n;
            const bool fill = len <= limit && has_left &&
                              (policy.kind == GapPolicy::Kind::CarryForward || has_right);
            if (fill) {
                const double left = samples[i - 1].field(f);
                const double right = has_right ? samples[j].field(f) : left;
                for (std::size_t k = i; k < j; ++k) {
                    double v = left;
                    if (policy.kind == GapPolicy::Kind::LinearInterpolate) {
                        const double frac = static_cast<double>(k - i + 1) / static_cast<double>(len + 1);
                        v = interpolate(f, left, right, frac);
                    }
                    samples[k].field(f) = v;
                    samples[k].present.set(f);
                    samples[k].synthetic.set(f);
                }
            }
            i = j;
        }
    }

    constexpr std::size_t avg = kTargets + kWindAvg;
    constexpr std::size_t peak = kTargets + kWindPeak;
    for (auto& s : samples) {
        if (s.present[avg] && s.present[peak] && s.synthetic[peak] && s.covariates[kWindPeak] < s.covariates[kWindAvg]) {
            s.covariates[kWindPeak] = s.covariates[kWindAvg];
        }
    }
    return out;
}

}  // namespace fqs
