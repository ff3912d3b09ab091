#include <doctest.h>

#include <cmath>
#include <ostream>
#include <string>

#include "fqs/error.hpp"
#include "fqs/series.hpp"
#include "support.hpp"

using namespace fqs;
using fqs::testing::make_series;
using fqs::testing::noisy_constant;
using fqs::testing::t0;

namespace {

std::string csv_with(const std::string& rows) { return canonical_header() + "\n" + rows; }

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::Io;
}

// Independent count of valid (inputs, label) positions.
std::size_t brute_force_windows(const Series& s, std::size_t T) {
    std::size_t count = 0;
    for (std::size_t label = T; label < s.size(); ++label) {
        bool ok = true;
        for (std::size_t k = label - T; k <= label && ok; ++k) {
            if (k > label - T && s.samples[k].timestamp.hours != s.samples[k - 1].timestamp.hours + 1) {
                ok = false;
            }
            if (k < label) {
                ok = ok && s.samples[k].present.all();
            }
        }
        for (std::size_t c = 0; c < kTargets && ok; ++c) {
            ok = s.samples[label].present[c] && !s.samples[label].synthetic[c];
        }
        count += ok ? 1 : 0;
    }
    return count;
}

}  // namespace

TEST_CASE("timestamps parse and format on the hourly grid") {
    const auto t = parse_timestamp("2016-08-24T03:00:00Z");
    CHECK(format_timestamp(t) == "2016-08-24T03:00:00Z");
    CHECK(parse_timestamp("2016-08-24", true) == parse_timestamp("2016-08-24T00:00:00Z"));
    CHECK_THROWS_AS(parse_timestamp("2016-08-24T03:30:00Z"), Error);
    CHECK_THROWS_AS(parse_timestamp("2016-08-24T03:00:15Z"), Error);
    CHECK_THROWS_AS(parse_timestamp("2016-08-24"), Error);
    CHECK(parse_timestamp("1970-01-01T05:00:00Z").hours == 5);
}

TEST_CASE("fingerprint maps hour, day and month") {
    CHECK(fingerprint(parse_timestamp("2016-08-24T03:00:00Z")) == Fingerprint{4, 24, 8});
    CHECK(fingerprint(parse_timestamp("2016-12-31T23:00:00Z")) == Fingerprint{24, 31, 12});
    CHECK(fingerprint(parse_timestamp("2016-01-01T00:00:00Z")) == Fingerprint{1, 1, 1});
    CHECK(fingerprint(parse_timestamp("2016-02-29T12:00:00Z")) == Fingerprint{13, 29, 2});
}

TEST_CASE("parse_csv") {
    const std::string row = "2016-01-01T00:00:00Z,1,1.1,3,4.2,5.9,12.5,0.2,70,2,3.5,180\n";

    SUBCASE("one valid row") {
        const auto s = parse_csv(csv_with(row));
        REQUIRE(s.size() == 1);
        CHECK(s.samples[0].present.all());
        CHECK(s.samples[0].synthetic.none());
        CHECK(s.samples[0].targets[2] == 3.0);
        CHECK(s.samples[0].calendar == Fingerprint{1, 1, 1});
    }
    SUBCASE("empty rain cell is missing") {
        const auto s = parse_csv(csv_with("2016-01-01T00:00:00Z,1,1.1,3,4.2,5.9,12.5,,70,2,3.5,180\n"));
        CHECK_FALSE(s.samples[0].present[kTargets + kRainfall]);
        CHECK(s.samples[0].present.count() == kFields - 1);
    }
    SUBCASE("duplicate timestamp") {
        CHECK(kind_of([&] { parse_csv(csv_with(row + row)); }) == ErrorKind::Parse);
    }
    SUBCASE("non-hourly timestamp") {
        CHECK_THROWS_AS(parse_csv(csv_with("2016-01-01T00:30:00Z,1,1.1,3,4.2,5.9,12.5,0.2,70,2,3.5,180\n")), Error);
    }
    SUBCASE("unknown column") {
        CHECK_THROWS_WITH_AS(parse_csv(canonical_header() + ",extra\n"), doctest::Contains("extra"), Error);
    }
    SUBCASE("malformed row reports its line") {
        CHECK_THROWS_WITH_AS(parse_csv(csv_with(row + "2016-01-01T01:00:00Z,1,1.1,abc,4.2,5.9,12.5,0.2,70,2,3.5,180\n")),
                             doctest::Contains("line 3"), Error);
    }
    SUBCASE("rows are sorted") {
        const auto s = parse_csv(csv_with("2016-01-01T05:00:00Z,1,1.1,3,4.2,5.9,12.5,0.2,70,2,3.5,180\n" + row));
        CHECK(s.samples[0].timestamp < s.samples[1].timestamp);
    }
    SUBCASE("CRLF and BOM") {
        auto text = "\xEF\xBB\xBF" + canonical_header() + "\r\n" + row;
        CHECK(parse_csv(text).size() == 1);
    }
}

TEST_CASE("CSV round-trip") {
    auto s = noisy_constant(50, 3, 0.01);
    s.samples[7].present.reset(kTargets + kHumidity);
    s.samples[7].covariates[kHumidity] = std::nan("");
    const auto text = write_csv(s);
    const auto back = parse_csv(text);
    REQUIRE(back.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(back.samples[i].timestamp == s.samples[i].timestamp);
        CHECK(back.samples[i].present == s.samples[i].present);
        for (std::size_t f = 0; f < kFields; ++f) {
            if (s.samples[i].present[f]) {
                CHECK(back.samples[i].field(f) == s.samples[i].field(f));
            }
        }
    }
    CHECK(write_csv(back) == text);
}

TEST_CASE("fill_gaps") {
    GapPolicy linear{GapPolicy::Kind::LinearInterpolate, 3};

    SUBCASE("no gaps is identity") {
        const auto s = noisy_constant(20, 1, 0.01);
        CHECK(fill_gaps(s, linear).samples == s.samples);
    }
    SUBCASE("single missing value is the midpoint") {
        auto s = noisy_constant(3, 1, 0.01);
        s.samples[0].targets[0] = 1.00;
        s.samples[2].targets[0] = 1.02;
        s.samples[1].present.reset(0);
        const auto f = fill_gaps(s, linear);
        CHECK(f.samples[1].targets[0] == doctest::Approx(1.01).epsilon(1e-12));
        CHECK(f.samples[1].present[0]);
        CHECK(f.samples[1].synthetic[0]);
        CHECK_FALSE(f.samples[1].genuine_targets());
    }
    SUBCASE("carry forward") {
        auto s = noisy_constant(4, 1, 0.01);
        s.samples[1].present.reset(1);
        s.samples[2].present.reset(1);
        const auto f = fill_gaps(s, GapPolicy{GapPolicy::Kind::CarryForward, 3});
        CHECK(f.samples[2].targets[1] == s.samples[0].targets[1]);
    }
    SUBCASE("wind direction takes the shorter arc") {
        auto s = noisy_constant(3, 1, 0.01);
        s.samples[0].covariates[kWindDir] = 350.0;
        s.samples[2].covariates[kWindDir] = 10.0;
        s.samples[1].present.reset(kTargets + kWindDir);
        const auto f = fill_gaps(s, linear);
        CHECK(f.samples[1].covariates[kWindDir] == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("long gap stays missing and blocks windows") {
        auto s = noisy_constant(40, 1, 0.01);
        s.samples.erase(s.samples.begin() + 15, s.samples.begin() + 25);  // 10 missing hours
        const auto f = fill_gaps(s, linear);
        CHECK(f.size() == 40);
        CHECK_FALSE(f.samples[20].present.any());
        const std::size_t T = 4;
        for (const auto& w : build_windows(f, T)) {
            const auto lo = w.inputs.front().timestamp;
            CHECK((w.label_time < t0() + 15 || lo >= t0() + 25));
        }
        CHECK(build_windows(f, T).size() == brute_force_windows(f, T));
    }
    SUBCASE("idempotent") {
        auto s = noisy_constant(60, 2, 0.01);
        s.samples.erase(s.samples.begin() + 10, s.samples.begin() + 12);
        s.samples.erase(s.samples.begin() + 30, s.samples.begin() + 40);
        s.samples[45].present.reset(3);
        const auto once = fill_gaps(s, linear);
        const auto twice = fill_gaps(once, linear);
        CHECK(write_csv(once) == write_csv(twice));
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(fill_gaps(noisy_constant(1, 1, 0.01), linear), Error);
        CHECK_THROWS_AS(fill_gaps(noisy_constant(5, 1, 0.01), GapPolicy{GapPolicy::Kind::LinearInterpolate, 0}), Error);
        CHECK_THROWS_AS(parse_gap_policy("cubic"), Error);
    }
}

TEST_CASE("compute_stats") {
    auto with_channel = [](std::vector<double> values) {
        return make_series(values.size(), 4, [values](std::size_t, std::size_t i, Rng&) { return values[i]; });
    };
    const TimeRange all{t0(), t0() + 100};

    SUBCASE("two points") {
        const auto st = compute_stats(with_channel({1.0, 3.0}), all);
        CHECK(st.target_mean[0] == 2.0);
        CHECK(st.target_std[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    }
    SUBCASE("five points") {
        const auto st = compute_stats(with_channel({0, 1, 2, 3, 4}), all);
        CHECK(st.target_mean[0] == 2.0);
        CHECK(st.target_std[0] == doctest::Approx(1.5811388300841898).epsilon(1e-14));
    }
    SUBCASE("constant channel") {
        CHECK_THROWS_WITH_AS(compute_stats(with_channel({2.0, 2.0, 2.0}), all), doctest::Contains("f1"), Error);
    }
    SUBCASE("empty range") {
        CHECK_THROWS_AS(compute_stats(with_channel({1, 2, 3}), TimeRange{t0() + 50, t0() + 60}), Error);
    }
    SUBCASE("standardize round-trip") {
        const auto st = compute_stats(noisy_constant(30, 1, 0.02), all);
        for (std::size_t c = 0; c < kTargets; ++c) {
            CHECK(st.destandardize_target(c, st.standardize_target(c, 3.7)) == doctest::Approx(3.7).epsilon(1e-14));
        }
    }
}

TEST_CASE("build_windows") {
    const std::size_t T = 6;

    SUBCASE("length T+1 gives one window") {
        const auto w = build_windows(noisy_constant(T + 1, 1, 0.01), T);
        REQUIRE(w.size() == 1);
        CHECK(w[0].label_time == t0() + static_cast<std::int64_t>(T));
    }
    SUBCASE("length N gives N-T windows in order") {
        const auto s = noisy_constant(50, 1, 0.01);
        const auto w = build_windows(s, T);
        CHECK(w.size() == 50 - T);
        for (std::size_t i = 0; i < w.size(); ++i) {
            CHECK(w[i].length() == T);
            CHECK(w[i].label_time == w[i].inputs.back().timestamp + 1);
            if (i > 0) {
                CHECK(w[i].label_time - w[i - 1].label_time == 1);
            }
        }
    }
    SUBCASE("too short is empty") { CHECK(build_windows(noisy_constant(T, 1, 0.01), T).empty()); }
    SUBCASE("T below 2 rejected") { CHECK_THROWS_AS(build_windows(noisy_constant(10, 1, 0.01), 1), Error); }
    SUBCASE("matches brute force on random masks") {
        Rng rng(99);
        for (int trial = 0; trial < 30; ++trial) {
            auto s = noisy_constant(200 + rng.below(800), trial, 0.01);
            for (auto& m : s.samples) {
                if (rng.uniform() < 0.02) {
                    m.present.reset(rng.below(kFields));
                }
                if (rng.uniform() < 0.01) {
                    m.synthetic.set(rng.below(kTargets));
                }
            }
            const std::size_t len = 2 + rng.below(30);
            CHECK(build_windows(s, len).size() == brute_force_windows(s, len));
        }
    }
}
