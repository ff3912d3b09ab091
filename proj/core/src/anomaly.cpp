#include "fqs/anomaly.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "fqs/error.hpp"
#include "parallel.hpp"

namespace fqs {

WeightMode parse_weight_mode(std::string_view name) {
    if (name == "inverse-mean-frequency") {
        return WeightMode::InverseMeanFrequency;
    }
    if (name == "uniform") {
        return WeightMode::Uniform;
    }
    fail(ErrorKind::Config,
         fmt::format("unknown weight mode '{}' (expected inverse-mean-frequency or uniform)", name));
}

std::string_view weight_mode_name(WeightMode mode) {
    return mode == WeightMode::Uniform ? "uniform" : "inverse-mean-frequency";
}

std::pair<std::size_t, std::size_t> band_indices(int percentile) {
    const auto upper = quantile_index(percentile / 100.0);
    const auto lower = quantile_index((100 - percentile) / 100.0);
    if (percentile <= 50 || !upper || !lower) {
        fail(ErrorKind::Config,
             fmt::format("percentile {} is not representable by the modeled quantiles (use 75, 90 or 99)", percentile));
    }
    return {*lower, *upper};
}

void DetectorConfig::validate() const {
    band_indices(percentile);
    if (window_length < 2) {
        fail(ErrorKind::Config, "detector window length must be at least 2");
    }
}

std::array<bool, kTargets> detect_point(const TargetVec& observed, const ForecastDistribution& dist, int percentile) {
    const auto [lo, hi] = band_indices(percentile);
    std::array<bool, kTargets> flags{};
    for (std::size_t c = 0; c < kTargets; ++c) {
        const auto& q = dist.channels[c].quantiles;
        flags[c] = observed[c] < q[lo] || observed[c] > q[hi];
    }
    return flags;
}

double deviation(double observed, double lower, double upper) {
    if (lower > upper) {
        fail(ErrorKind::Data, fmt::format("band lower bound {} exceeds upper bound {}", lower, upper));
    }
    return std::max({0.0, lower - observed, observed - upper});
}

double weighted_score(std::span<const double, kTargets> deviations, std::span<const double, kTargets> reference) {
    double score = 0.0;
    for (std::size_t c = 0; c < kTargets; ++c) {
        if (!(reference[c] > 0.0)) {
            fail(ErrorKind::Data, fmt::format("score reference for channel {} must be positive, got {}", c + 1,
                                              reference[c]));
        }
        score += deviations[c] / reference[c];
    }
    return score;
}

TargetVec score_reference(const ModelState& model, WeightMode mode) {
    TargetVec ref{};
    if (mode == WeightMode::Uniform) {
        ref.fill(1.0);
    } else {
        ref = model.norm.target_mean;
    }
    return ref;
}

AnomalyRecord assess(HourStamp t, const TargetVec& observed, const ForecastDistribution& dist,
                     const DetectorConfig& config, const TargetVec& reference) {
    const auto [lo, hi] = band_indices(config.percentile);
    const auto flags = detect_point(observed, dist, config.percentile);
    AnomalyRecord rec;
    rec.timestamp = t;
    rec.scored = true;
    rec.forecast = dist;
    std::array<double, kTargets> devs{};
    for (std::size_t c = 0; c < kTargets; ++c) {
        auto& v = rec.channels[c];
        v.channel = c;
        v.observed = observed[c];
        v.lower = dist.channels[c].quantiles[lo];
        v.upper = dist.channels[c].quantiles[hi];
        v.deviation = deviation(v.observed, v.lower, v.upper);
        v.violated = flags[c];
        devs[c] = v.deviation;
        rec.anomalous = rec.anomalous || flags[c];
    }
    rec.score = weighted_score(devs, reference);
    return rec;
}

std::vector<AnomalyRecord> run_sliding(const ModelState& model, const Series& series, const DetectorConfig& config,
                                       std::size_t threads) {
    config.validate();
    if (model.config.window_length != config.window_length) {
        fail(ErrorKind::Config, fmt::format("model window length {} does not match detector window length {}",
                                            model.config.window_length, config.window_length));
    }
    const std::size_t T = config.window_length;
    if (series.empty() || series.last() - series.first() < static_cast<std::int64_t>(T)) {
        fail(ErrorKind::Data, fmt::format("detection needs a series covering at least {} hours", T + 1));
    }
    const TargetVec reference = score_reference(model, config.weights);

    const std::size_t n = series.size();
    std::vector<AnomalyRecord> records(n);
    detail::parallel_for(threads, n, [&](std::size_t i) {
            const auto& s = series.samples[i];
            if (!window_valid_at(series, i, T)) {
                AnomalyRecord rec;
                rec.timestamp = s.timestamp;
                for (std::size_t c = 0; c < kTargets; ++c) {
                    rec.channels[c].channel = c;
                    rec.channels[c].observed =
                        s.present[c] ? s.targets[c] : std::numeric_limits<double>::quiet_NaN();
                    rec.channels[c].lower = std::numeric_limits<double>::quiet_NaN();
                    rec.channels[c].upper = std::numeric_limits<double>::quiet_NaN();
                }
                records[i] = rec;
                return;
            }
            Window w;
            w.inputs = std::span<const MonitoringSample>(series.samples.data() + (i - T), T);
            w.label = s.targets;
            w.label_time = s.timestamp;
            records[i] = assess(s.timestamp, s.targets, forward(model, w), config, reference);
    });
    return records;
}

}  // namespace fqs
