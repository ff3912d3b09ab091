#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fqs/anomaly.hpp"
#include "fqs/error.hpp"
#include "fqs/forecaster.hpp"
#include "support.hpp"

using namespace fqs;
using fqs::testing::noisy_constant;

namespace {

ForecastDistribution band(double lo, double hi) {
    ForecastDistribution d;
    for (auto& ch : d.channels) {
        const double mid = 0.5 * (lo + hi);
        ch.mean = mid;
        ch.quantiles = {lo, lo + 0.1 * (mid - lo), lo + 0.5 * (mid - lo), mid, mid + 0.5 * (hi - mid),
                        hi - 0.1 * (hi - mid), hi};
    }
    return d;
}

ForecastDistribution random_distribution(Rng& rng) {
    ForecastDistribution d;
    for (auto& ch : d.channels) {
        for (auto& q : ch.quantiles) {
            q = std::round(rng.uniform(0.5, 1.5) * 100.0) / 100.0;
        }
        std::sort(ch.quantiles.begin(), ch.quantiles.end());
        ch.mean = ch.quantiles[3];
    }
    return d;
}

// Direct statement of the band condition: anomalous unless pi_(100-p) <= x <= pi_p.
bool brute_force_flag(double x, const ChannelForecast& f, int p) {
    const double lower_level = (100 - p) / 100.0;
    const double upper_level = p / 100.0;
    double lower = std::nan("");
    double upper = std::nan("");
    for (std::size_t k = 0; k < kQuantileLevels.size(); ++k) {
        if (std::abs(kQuantileLevels[k] - lower_level) < 1e-9) {
            lower = f.quantiles[k];
        }
        if (std::abs(kQuantileLevels[k] - upper_level) < 1e-9) {
            upper = f.quantiles[k];
        }
    }
    return !(lower <= x && x <= upper);
}

}  // namespace

TEST_CASE("band indices") {
    CHECK(band_indices(99) == std::pair<std::size_t, std::size_t>{0, 6});
    CHECK(band_indices(90) == std::pair<std::size_t, std::size_t>{1, 5});
    CHECK(band_indices(75) == std::pair<std::size_t, std::size_t>{2, 4});
    CHECK_THROWS_AS(band_indices(95), Error);
    const DetectorConfig bad{50, 96, WeightMode::Uniform};
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("detect_point") {
    const auto d = band(1.0, 2.0);
    SUBCASE("interior") {
        const TargetVec obs{1.5, 1.5, 1.5, 1.5, 1.5};
        const auto f = detect_point(obs, d, 99);
        CHECK(std::none_of(f.begin(), f.end(), [](bool b) { return b; }));
    }
    SUBCASE("channel 2 above the band") {
        const TargetVec obs{1.5, 2.1, 1.5, 1.5, 1.5};
        CHECK(detect_point(obs, d, 99) == std::array<bool, kTargets>{false, true, false, false, false});
    }
    SUBCASE("equality is inside") {
        const TargetVec obs{2.0, 1.0, 2.0, 1.0, 1.5};
        const auto f = detect_point(obs, d, 99);
        CHECK(std::none_of(f.begin(), f.end(), [](bool b) { return b; }));
    }
    SUBCASE("narrower percentile flags more") {
        const TargetVec obs{1.02, 1.5, 1.5, 1.5, 1.98};
        CHECK(detect_point(obs, d, 75) == std::array<bool, kTargets>{true, false, false, false, true});
    }
    SUBCASE("matches brute force including ties") {
        Rng rng(31);
        const int ps[] = {75, 90, 99};
        for (int i = 0; i < 2000; ++i) {
            const auto dist = random_distribution(rng);
            const int p = ps[rng.below(3)];
            TargetVec obs{};
            for (std::size_t c = 0; c < kTargets; ++c) {
                obs[c] = rng.uniform() < 0.3 ? dist.channels[c].quantiles[rng.below(kQuantiles)]
                                             : std::round(rng.uniform(0.4, 1.6) * 100.0) / 100.0;
            }
            const auto flags = detect_point(obs, dist, p);
            for (std::size_t c = 0; c < kTargets; ++c) {
                CHECK(flags[c] == brute_force_flag(obs[c], dist.channels[c], p));
            }
        }
    }
}

TEST_CASE("deviation") {
    CHECK(deviation(1.5, 1.0, 2.0) == 0.0);
    CHECK(deviation(2.05, 1.0, 2.0) == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(deviation(0.98, 1.0, 2.0) == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(deviation(2.0, 1.0, 2.0) == 0.0);
    CHECK_THROWS_AS(deviation(1.0, 2.0, 1.0), Error);
}

TEST_CASE("weighted_score") {
    const std::array<double, kTargets> ref{1.0, 1.1, 3.0, 4.2, 5.9};
    CHECK(weighted_score(std::array<double, kTargets>{}, ref) == 0.0);
    CHECK(weighted_score(std::array<double, kTargets>{0.1, 0, 0, 0, 0}, ref) == doctest::Approx(0.1).epsilon(1e-15));
    SUBCASE("equal deviations") {
        const double d = 0.03;
        const std::array<double, kTargets> devs{d, d, d, d, d};
        const double inv_sum = 1.0 / 1.0 + 1.0 / 1.1 + 1.0 / 3.0 + 1.0 / 4.2 + 1.0 / 5.9;
        CHECK(weighted_score(devs, ref) == doctest::Approx(d * inv_sum).epsilon(1e-14));
        for (std::size_t c = 1; c < kTargets; ++c) {
            std::array<double, kTargets> only_first{}, only_c{};
            only_first[0] = d;
            only_c[c] = d;
            CHECK(weighted_score(only_first, ref) > weighted_score(only_c, ref));
        }
    }
    SUBCASE("homogeneity and monotonicity") {
        Rng rng(17);
        for (int i = 0; i < 10000; ++i) {
            std::array<double, kTargets> devs{};
            for (auto& v : devs) {
                v = rng.uniform() < 0.5 ? 0.0 : std::ldexp(static_cast<double>(rng.below(1 << 20)), -20);
            }
            const double k = static_cast<double>(1u << rng.below(8));
            std::array<double, kTargets> scaled{};
            for (std::size_t c = 0; c < kTargets; ++c) {
                scaled[c] = k * devs[c];
            }
            CHECK(weighted_score(scaled, ref) == k * weighted_score(devs, ref));
            auto bumped = devs;
            bumped[rng.below(kTargets)] += 0.125;
            CHECK(weighted_score(bumped, ref) > weighted_score(devs, ref));
        }
    }
    SUBCASE("non-positive reference") {
        CHECK_THROWS_AS(weighted_score(std::array<double, kTargets>{}, std::array<double, kTargets>{1, 1, 0, 1, 1}),
                        Error);
    }
}

TEST_CASE("assess") {
    const auto d = band(1.0, 2.0);
    const TargetVec ref{1, 1, 1, 1, 1};
    const DetectorConfig cfg{99, 8, WeightMode::Uniform};
    const auto r = assess(fqs::testing::t0(), TargetVec{1.5, 2.25, 0.5, 1.5, 1.5}, d, cfg, ref);
    CHECK(r.scored);
    CHECK(r.anomalous);
    CHECK(r.channels[1].violated);
    CHECK(r.channels[2].violated);
    CHECK(r.score == doctest::Approx(0.75).epsilon(1e-14));
    const auto quiet = assess(fqs::testing::t0(), TargetVec{1.5, 1.5, 1.5, 1.5, 1.5}, d, cfg, ref);
    CHECK_FALSE(quiet.anomalous);
    CHECK(quiet.score == 0.0);
}

TEST_CASE("run_sliding") {
    ModelConfig c;
    c.window_length = 6;
    c.hidden = 4;
    c.heads = 1;
    const auto s = noisy_constant(60, 1, 0.01);
    auto m = init(c, 3);
    m.norm = compute_stats(s, TimeRange{s.first(), s.last() + 1});
    DetectorConfig dc;
    dc.window_length = 6;

    SUBCASE("counting") {
        const auto records = run_sliding(m, s, dc);
        REQUIRE(records.size() == s.size());
        CHECK(std::count_if(records.begin(), records.end(), [](const auto& r) { return r.scored; }) == 60 - 6);
        for (std::size_t i = 0; i < 6; ++i) {
            CHECK_FALSE(records[i].scored);
        }
    }
    SUBCASE("records equal per-window assessment") {
        const auto records = run_sliding(m, s, dc, 3);
        const auto windows = build_windows(s, 6);
        const auto ref = score_reference(m, dc.weights);
        for (std::size_t i = 0; i < windows.size(); ++i) {
            const auto expect = assess(windows[i].label_time, windows[i].label, forward(m, windows[i]), dc, ref);
            const auto& got = records[i + 6];
            CHECK(got.timestamp == expect.timestamp);
            CHECK(got.score == expect.score);
            CHECK(got.anomalous == expect.anomalous);
            for (std::size_t ch = 0; ch < kTargets; ++ch) {
                CHECK(got.channels[ch].violated ==
                      brute_force_flag(windows[i].label[ch], got.forecast->channels[ch], dc.percentile));
            }
        }
    }
    SUBCASE("gap yields unscored records") {
        auto gappy = s;
        gappy.samples[30].present.reset(kTargets + kHumidity);
        const auto records = run_sliding(m, gappy, dc);
        for (std::size_t i = 31; i <= 36; ++i) {
            CHECK_FALSE(records[i].scored);
        }
        CHECK(records[37].scored);
    }
    SUBCASE("window mismatch") {
        dc.window_length = 7;
        CHECK_THROWS_AS(run_sliding(m, s, dc), Error);
    }
    SUBCASE("too short") { CHECK_THROWS_AS(run_sliding(m, noisy_constant(5, 1, 0.01), dc), Error); }
}
