#include "fqs/series.hpp"

#include <algorithm>
#include <limits>

#include <fmt/format.h>

#include "fqs/error.hpp"

namespace fqs {

const std::array<ChannelInfo, kFields>& channel_info() {
    static const std::array<ChannelInfo, kFields> info{{
        {"f1", "Hz"},
        {"f2", "Hz"},
        {"f3", "Hz"},
        {"f4", "Hz"},
        {"f5", "Hz"},
        {"temp_c", "degC"},
        {"rain_mm", "mm/h"},
        {"humidity_pct", "%"},
        {"wind_avg_ms", "m/s"},
        {"wind_peak_ms", "m/s"},
        {"wind_dir_deg", "deg"},
    }};
    return info;
}

std::string canonical_header() {
    std::string header = "timestamp";
    for (const auto& ch : channel_info()) {
        header += ',';
        header += ch.name;
    }
    return header;
}

bool MonitoringSample::genuine_targets() const {
    for (std::size_t c = 0; c < kTargets; ++c) {
        if (!present[c] || synthetic[c]) {
            return false;
        }
    }
    return true;
}

MonitoringSample missing_sample(HourStamp t) {
    MonitoringSample s;
    s.timestamp = t;
    s.calendar = fingerprint(t);
    s.targets.fill(std::numeric_limits<double>::quiet_NaN());
    s.covariates.fill(std::numeric_limits<double>::quiet_NaN());
    return s;
}

Series slice(const Series& series, HourStamp from, HourStamp to) {
    Series out;
    out.provenance = series.provenance;
    for (const auto& s : series.samples) {
        if (from <= s.timestamp && s.timestamp < to) {
            out.samples.push_back(s);
        }
    }
    return out;
}

void validate_sample(const MonitoringSample& s) {
    const auto& info = channel_info();
    auto bad = [&](std::size_t i, std::string_view why) {
        fail(ErrorKind::Data, fmt::format("{} at {}: {} (value {})", info[i].name, format_timestamp(s.timestamp),
                                          why, s.field(i)));
    };
    for (std::size_t i = 0; i < kFields; ++i) {
        if (s.present[i] && !std::isfinite(s.field(i))) {
            bad(i, "not finite");
        }
    }
    for (std::size_t c = 0; c < kTargets; ++c) {
        if (s.present[c] && !(s.targets[c] > 0.0)) {
            bad(c, "frequency must be strictly positive");
        }
    }
    auto cov_present = [&](Covariate c) { return s.present[kTargets + c]; };
    if (cov_present(kRainfall) && s.covariates[kRainfall] < 0.0) {
        bad(kTargets + kRainfall, "rainfall must be non-negative");
    }
    if (cov_present(kHumidity) && (s.covariates[kHumidity] < 0.0 || s.covariates[kHumidity] > 100.0)) {
        bad(kTargets + kHumidity, "humidity must lie in [0, 100]");
    }
    if (cov_present(kWindAvg) && s.covariates[kWindAvg] < 0.0) {
        bad(kTargets + kWindAvg, "wind speed must be non-negative");
    }
    if (cov_present(kWindPeak) && s.covariates[kWindPeak] < 0.0) {
        bad(kTargets + kWindPeak, "wind speed must be non-negative");
    }
    if (cov_present(kWindAvg) && cov_present(kWindPeak) && s.covariates[kWindPeak] < s.covariates[kWindAvg]) {
        bad(kTargets + kWindPeak, "peak wind speed below average");
    }
    if (cov_present(kWindDir) && (s.covariates[kWindDir] < 0.0 || s.covariates[kWindDir] >= 360.0)) {
        bad(kTargets + kWindDir, "wind direction must lie in [0, 360)");
    }
}

std::array<double, kModelCovariates> model_covariates(const MonitoringSample& s) {
    constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
    const double theta = s.covariates[kWindDir] * kDegToRad;
    return {s.covariates[kTemperature], s.covariates[kRainfall], s.covariates[kHumidity],
            s.covariates[kWindAvg],     s.covariates[kWindPeak], std::cos(theta),
            std::sin(theta)};
}

}  // namespace fqs
