#include <cmath>

#include <fmt/format.h>

#include "fqs/error.hpp"
#include "fqs/series.hpp"

namespace fqs {

namespace {

struct Moments {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void push(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
};

std::pair<double, double> finish(const Moments& m, std::string_view name) {
    if (m.n < 2) {
        fail(ErrorKind::Data, fmt::format("channel '{}' has fewer than 2 values in the statistics range", name));
    }
    const double sd = std::sqrt(m.m2 / static_cast<double>(m.n - 1));
    if (!(sd > 0.0) || !std::isfinite(sd)) {
        fail(ErrorKind::Data, fmt::format("channel '{}' is degenerate (zero standard deviation)", name));
    }
    return {m.mean, sd};
}

}  // namespace

NormStats compute_stats(const Series& series, const TimeRange& range, bool include_synthetic) {
    if (!(range.from < range.to)) {
        fail(ErrorKind::Data, "empty statistics range");
    }
    std::array<Moments, kTargets> targets;
    std::array<Moments, kModelCovariates> covs;
    std::size_t in_range = 0;
    for (const auto& s : series.samples) {
        if (!range.contains(s.timestamp)) {
            continue;
        }
        ++in_range;
        auto usable = [&](std::size_t f) { return s.present[f] && (include_synthetic || !s.synthetic[f]); };
        for (std::size_t c = 0; c < kTargets; ++c) {
            if (usable(c)) {
                targets[c].push(s.targets[c]);
            }
        }
        const auto mc = model_covariates(s);
        for (std::size_t c = 0; c < kWindDir; ++c) {
            if (usable(kTargets + c)) {
                covs[c].push(mc[c]);
            }
        }
        if (usable(kTargets + kWindDir)) {
            covs[5].push(mc[5]);
            covs[6].push(mc[6]);
        }
    }
    if (in_range == 0) {
        fail(ErrorKind::Data, "empty statistics range");
    }

    static constexpr std::array<std::string_view, kModelCovariates> cov_names{
        "temp_c", "rain_mm", "humidity_pct", "wind_avg_ms", "wind_peak_ms", "wind_dir_cos", "wind_dir_sin"};
    NormStats stats;
    for (std::size_t c = 0; c < kTargets; ++c) {
        std::tie(stats.target_mean[c], stats.target_std[c]) = finish(targets[c], channel_info()[c].name);
    }
    for (std::size_t c = 0; c < kModelCovariates; ++c) {
        std::tie(stats.covariate_mean[c], stats.covariate_std[c]) = finish(covs[c], cov_names[c]);
    }
    return stats;
}

}  // namespace fqs
