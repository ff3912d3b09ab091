#include <doctest.h>

#include <algorithm>

#include "fqs/anomaly.hpp"
#include "fqs/error.hpp"
#include "fqs/forecaster.hpp"
#include "fqs/synthbench.hpp"
#include "support.hpp"

using namespace fqs;
using fqs::testing::t0;

namespace {

Scenario small_scenario() {
    Scenario sc;
    sc.start = t0();
    sc.duration_hours = 2000;
    sc.seed = 42;
    return sc;
}

AnomalyEvent event(std::string id, EventKind kind, std::int64_t start, std::size_t hours, double magnitude,
                   std::vector<std::size_t> channels) {
    AnomalyEvent e;
    e.id = std::move(id);
    e.kind = kind;
    e.start = t0() + start;
    e.duration_hours = hours;
    e.magnitude = magnitude;
    e.channels = std::move(channels);
    return e;
}

AnomalyRecord record(HourStamp t, bool anomalous, double score = 1.0) {
    AnomalyRecord r;
    r.timestamp = t;
    r.scored = true;
    r.anomalous = anomalous;
    r.score = anomalous ? score : 0.0;
    return r;
}

}  // namespace

TEST_CASE("generate") {
    SUBCASE("degenerate scenario is constant") {
        auto sc = small_scenario();
        sc.temperature_coupling_hz_per_c = {};
        sc.noise_sd_hz = {};
        const auto g = generate(sc);
        for (const auto& s : g.series.samples) {
            CHECK(s.targets == sc.baseline_hz);
        }
        CHECK(std::none_of(g.labels.begin(), g.labels.end(), [](const auto& l) { return l.anomalous; }));
    }
    SUBCASE("deterministic") {
        const auto a = generate(small_scenario());
        const auto b = generate(small_scenario());
        CHECK(a.series.samples == b.series.samples);
        CHECK(a.labels == b.labels);
        auto other = small_scenario();
        other.seed = 43;
        CHECK(generate(other).series.samples != a.series.samples);
    }
    SUBCASE("spike differs from the clean series in one cell") {
        const auto clean = generate(small_scenario());
        auto sc = small_scenario();
        sc.events.push_back(event("spike", EventKind::Spike, 1000, 1, 5.0, {1}));
        const auto g = generate(sc);
        for (std::size_t h = 0; h < g.series.size(); ++h) {
            const auto& a = g.series.samples[h];
            const auto& b = clean.series.samples[h];
            CHECK(a.covariates == b.covariates);
            for (std::size_t c = 0; c < kTargets; ++c) {
                if (h == 1000 && c == 1) {
                    CHECK(a.targets[c] == b.targets[c] + 5.0 * sc.noise_sd_hz[1]);
                    CHECK(a.targets[c] - b.targets[c] == doctest::Approx(5.0 * sc.noise_sd_hz[1]).epsilon(1e-9));
                } else {
                    CHECK(a.targets[c] == b.targets[c]);
                }
            }
            CHECK(g.labels[h].anomalous == (h == 1000));
        }
        CHECK(g.labels[1000].event_id == "spike");
    }
    SUBCASE("samples satisfy the range constraints") {
        for (const auto& s : generate(small_scenario()).series.samples) {
            CHECK_NOTHROW(validate_sample(s));
        }
    }
    SUBCASE("temperature coupling shows in the targets") {
        const auto g = generate(small_scenario());
        double sx = 0, sy = 0, sxy = 0, sxx = 0;
        const double n = static_cast<double>(g.series.size());
        for (const auto& s : g.series.samples) {
            const double x = s.covariates[kTemperature];
            const double y = s.targets[4];
            sx += x;
            sy += y;
            sxy += x * y;
            sxx += x * x;
        }
        const double slope = (sxy - sx * sy / n) / (sxx - sx * sx / n);
        CHECK(slope == doctest::Approx(0.016).epsilon(0.1));
    }
    SUBCASE("periodic pulses get numbered labels") {
        auto sc = small_scenario();
        auto e = event("bells", EventKind::PeriodicChannel2, 100, 24 * 21, 3.0, {1});
        e.period_hours = 168;
        e.pulse_hours = 3;
        sc.events.push_back(e);
        const auto g = generate(sc);
        CHECK(g.labels[100].event_id == "bells#0");
        CHECK(g.labels[102].event_id == "bells#0");
        CHECK_FALSE(g.labels[103].anomalous);
        CHECK(g.labels[268].event_id == "bells#1");
        const auto events = label_events(g.labels);
        CHECK(events.size() == 3);
        CHECK(events[2].span.to - events[2].span.from == 3);
    }
}

TEST_CASE("scenario validation") {
    auto sc = small_scenario();
    sc.events.push_back(event("quake", EventKind::MultiChannelTransient, 100, 4, 5.0, {0, 1, 2}));
    sc.events.push_back(event("party", EventKind::MultiChannelTransient, 102, 12, 3.0, {2, 3}));
    CHECK_THROWS_WITH_AS(generate(sc), doctest::Contains("quake"), Error);
    CHECK_THROWS_WITH_AS(generate(sc), doctest::Contains("party"), Error);

    sc.events[1].channels = {3, 4};
    CHECK_NOTHROW(generate(sc));

    sc.events[1].id = "quake";
    CHECK_THROWS_AS(sc.validate(), Error);

    auto outside = small_scenario();
    outside.events.push_back(event("late", EventKind::Spike, 5000, 1, 5.0, {0}));
    CHECK_THROWS_AS(outside.validate(), Error);
}

TEST_CASE("scenario JSON") {
    auto sc = small_scenario();
    sc.events.push_back(event("quake", EventKind::MultiChannelTransient, 100, 4, 5.0, {0, 1, 2, 3, 4}));
    const auto back = scenario_from_json(scenario_to_json(sc));
    CHECK(scenario_to_json(back) == scenario_to_json(sc));
    CHECK(back.events[0].channels == sc.events[0].channels);
    CHECK(generate(back).series.samples == generate(sc).series.samples);

    const auto periodic = scenario_from_json(
        R"({"start":"2016-01-01","events":[{"id":"b","kind":"periodic-channel-2","start":"2016-01-02","duration_hours":400,"magnitude":3}]})");
    CHECK(periodic.events[0].channels == std::vector<std::size_t>{1});
    CHECK_THROWS_AS(scenario_from_json(R"({"duration":10})"), Error);
    CHECK_THROWS_AS(scenario_from_json(R"({"events":[{"kind":"spike","start":"2016-01-01","channels":[6]}]})"), Error);
    CHECK_THROWS_AS(scenario_from_json("not json"), Error);
}

TEST_CASE("labels CSV round-trip") {
    auto sc = small_scenario();
    sc.events.push_back(event("quake", EventKind::MultiChannelTransient, 100, 4, 5.0, {0, 1}));
    const auto g = generate(sc);
    const auto text = write_labels_csv(g.labels);
    CHECK(text.rfind("timestamp,is_anomaly,event_id\n", 0) == 0);
    CHECK(parse_labels_csv(text) == g.labels);
}

TEST_CASE("evaluate") {
    std::vector<Label> labels;
    std::vector<AnomalyRecord> records;
    for (std::int64_t h = 0; h < 1100; ++h) {
        Label l{t0() + h, false, ""};
        if (h >= 500 && h < 504) {
            l.anomalous = true;
            l.event_id = "quake";
        }
        labels.push_back(l);
        records.push_back(record(t0() + h, l.anomalous));
    }

    SUBCASE("perfect detector") {
        const auto r = evaluate(records, labels, 2, 0.0);
        CHECK(r.precision == 1.0);
        CHECK(r.recall == 1.0);
        CHECK(r.f1 == 1.0);
        CHECK(r.false_positive_rate == 0.0);
        REQUIRE(r.per_event.size() == 1);
        CHECK(r.per_event[0].first_detection == t0() + 500);
    }
    SUBCASE("no flags") {
        for (auto& r : records) {
            r.anomalous = false;
            r.score = 0.0;
        }
        const auto r = evaluate(records, labels, 2, 0.0);
        CHECK(r.recall == 0.0);
        CHECK(r.precision == 1.0);
        CHECK(r.zero_flags);
        CHECK(eval_report_to_json(r).find("note") != std::string::npos);
    }
    SUBCASE("one false alarm in 1000 clean hours") {
        // 8 hours lie within the tolerated event span.
        records.resize(1008);
        labels.resize(1008);
        records[100].anomalous = true;
        records[100].score = 1.0;
        const auto r = evaluate(records, labels, 2, 0.0);
        CHECK(r.clean_scored == 1000);
        CHECK(r.false_flags == 1);
        CHECK(r.false_positive_rate == doctest::Approx(0.001).epsilon(1e-15));
    }
    SUBCASE("tolerance window") {
        for (auto& r : records) {
            r.anomalous = false;
            r.score = 0.0;
        }
        records[505].anomalous = true;
        records[505].score = 1.0;
        CHECK(evaluate(records, labels, 2, 0.0).recall == 1.0);
        CHECK(evaluate(records, labels, 1, 0.0).recall == 0.0);
    }
    SUBCASE("threshold") {
        records[501].score = 0.2;
        for (auto i : {500, 502, 503}) {
            records[i].score = 0.1;
        }
        CHECK(evaluate(records, labels, 2, 0.15).recall == 1.0);
        CHECK(evaluate(records, labels, 2, 0.5).recall == 0.0);
    }
    SUBCASE("unscored records are ignored") {
        records[700].anomalous = true;
        records[700].scored = false;
        CHECK(evaluate(records, labels, 2, 0.0).false_flags == 0);
    }
    SUBCASE("timeline mismatch") {
        labels.erase(labels.begin() + 10);
        CHECK_THROWS_AS(evaluate(records, labels, 2, 0.0), Error);
    }
}

TEST_CASE("a trained detector catches an injected spike") {
    auto sc = small_scenario();
    sc.temperature_coupling_hz_per_c = {};
    sc.duration_hours = 1600;
    sc.events.push_back(event("spike", EventKind::Spike, 1500, 1, 5.0, {1}));
    const auto g = generate(sc);

    ModelConfig c;
    c.window_length = 8;
    c.hidden = 8;
    c.heads = 1;
    c.hour_embedding = c.day_embedding = c.month_embedding = 2;
    c.batch_size = 32;
    c.learning_rate = 5e-3;
    c.max_epochs = 20;
    c.seed = 1;
    const auto m = train(slice(g.series, g.series.first(), t0() + 1400), c);

    DetectorConfig dc;
    dc.window_length = c.window_length;
    const auto records = run_sliding(m, g.series, dc);
    const auto& r = records[1500];
    CHECK(r.scored);
    CHECK(r.anomalous);
    CHECK(r.channels[1].violated);
}
