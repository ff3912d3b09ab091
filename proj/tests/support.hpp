#pragma once

#include <cmath>
#include <cstdint>
#include <functional>

#include "fqs/random.hpp"
#include "fqs/series.hpp"
#include "fqs/timestamp.hpp"

namespace fqs::testing {

inline HourStamp t0() { return parse_timestamp("2016-01-01T00:00:00Z"); }

/// Fully present hourly series; targets from `target`, covariates random but plausible.
inline Series make_series(std::size_t n, std::uint64_t seed,
                          const std::function<double(std::size_t c, std::size_t i, Rng&)>& target) {
    Series s;
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        MonitoringSample m;
        m.timestamp = t0() + static_cast<std::int64_t>(i);
        m.calendar = fingerprint(m.timestamp);
        for (std::size_t c = 0; c < kTargets; ++c) {
            m.targets[c] = target(c, i, rng);
        }
        m.covariates[kTemperature] = 10.0 + 5.0 * rng.uniform();
        m.covariates[kRainfall] = i % 5 == 0 ? rng.uniform(0.1, 3.0) : 0.0;
        m.covariates[kHumidity] = rng.uniform(50.0, 90.0);
        m.covariates[kWindAvg] = rng.uniform(0.0, 5.0);
        m.covariates[kWindPeak] = m.covariates[kWindAvg] + rng.uniform(0.0, 3.0);
        m.covariates[kWindDir] = rng.uniform(0.0, 360.0);
        m.present.set();
        s.samples.push_back(m);
    }
    return s;
}

/// Baseline frequencies with Gaussian noise of `sd` on every channel.
inline Series noisy_constant(std::size_t n, std::uint64_t seed, double sd) {
    static constexpr double base[kTargets] = {1.0, 1.1, 3.0, 4.2, 5.9};
    return make_series(n, seed, [sd](std::size_t c, std::size_t, Rng& r) { return base[c] + sd * r.gaussian(); });
}

}  // namespace fqs::testing
