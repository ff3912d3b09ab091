#include "fqs/synthbench.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

#include "fqs/error.hpp"
#include "fqs/random.hpp"

namespace fqs {

namespace {

using nlohmann::json;

constexpr double kTwoPi = 6.283185307179586476925;
constexpr double kDaysPerYear = 365.25;

enum Stream : std::uint64_t {
    kTemperatureStream = 1,
    kTargetStream = 2,
    kRainStream = 3,
    kHumidityStream = 4,
    kWindStream = 5,
};

}  // namespace

EventKind parse_event_kind(std::string_view name) {
    if (name == "spike") {
        return EventKind::Spike;
    }
    if (name == "step-shift") {
        return EventKind::StepShift;
    }
    if (name == "periodic-channel-2") {
        return EventKind::PeriodicChannel2;
    }
    if (name == "multi-channel-transient") {
        return EventKind::MultiChannelTransient;
    }
    fail(ErrorKind::Config, fmt::format("unknown event kind '{}'", name));
}

std::string_view event_kind_name(EventKind kind) {
    switch (kind) {
        case EventKind::Spike:
            return "spike";
        case EventKind::StepShift:
            return "step-shift";
        case EventKind::PeriodicChannel2:
            return "periodic-channel-2";
        case EventKind::MultiChannelTransient:
            return "multi-channel-transient";
    }
    return "spike";
}

std::vector<TimeRange> AnomalyEvent::active_spans() const {
    const HourStamp end = start + static_cast<std::int64_t>(duration_hours);
    if (kind != EventKind::PeriodicChannel2) {
        return {TimeRange{start, end}};
    }
    std::vector<TimeRange> spans;
    for (HourStamp p = start; p < end; p = p + static_cast<std::int64_t>(period_hours)) {
        spans.push_back(TimeRange{p, std::min(end, p + static_cast<std::int64_t>(pulse_hours))});
    }
    return spans;
}

void Scenario::validate() const {
    auto bad = [](const std::string& msg) { fail(ErrorKind::Config, "invalid scenario: " + msg); };
    if (duration_hours < 2) {
        bad("duration must be at least 2 hours");
    }
    for (std::size_t c = 0; c < kTargets; ++c) {
        if (!(baseline_hz[c] > 0.0)) {
            bad(fmt::format("baseline of channel {} must be positive", c + 1));
        }
        if (!(noise_sd_hz[c] >= 0.0)) {
            bad(fmt::format("noise sd of channel {} must be non-negative", c + 1));
        }
        if (!std::isfinite(temperature_coupling_hz_per_c[c])) {
            bad(fmt::format("temperature coupling of channel {} must be finite", c + 1));
        }
    }
    if (!(std::abs(temperature.ar_coefficient) < 1.0)) {
        bad("temperature AR coefficient must lie in (-1, 1)");
    }
    if (temperature.innovation_sd_c < 0.0 || covariates.humidity_sd_pct < 0.0 || covariates.wind_sd_ms < 0.0 ||
        covariates.wind_direction_sd_deg < 0.0) {
        bad("noise parameters must be non-negative");
    }
    if (covariates.rain_start_probability < 0.0 || covariates.rain_start_probability > 1.0 ||
        covariates.rain_stop_probability < 0.0 || covariates.rain_stop_probability > 1.0 ||
        covariates.rain_mean_mm < 0.0) {
        bad("rain parameters out of range");
    }

    const HourStamp end = start + static_cast<std::int64_t>(duration_hours);
    for (const auto& e : events) {
        if (!(e.magnitude > 0.0)) {
            bad(fmt::format("event '{}' magnitude must be positive", e.id));
        }
        if (e.sign != 1.0 && e.sign != -1.0) {
            bad(fmt::format("event '{}' sign must be +1 or -1", e.id));
        }
        if (e.channels.empty()) {
            bad(fmt::format("event '{}' affects no channels", e.id));
        }
        for (const auto c : e.channels) {
            if (c >= kTargets) {
                bad(fmt::format("event '{}' references channel {} (valid 1..{})", e.id, c + 1, kTargets));
            }
        }
        if (e.duration_hours < 1) {
            bad(fmt::format("event '{}' duration must be at least 1 hour", e.id));
        }
        if (e.kind == EventKind::PeriodicChannel2 && (e.period_hours < 1 || e.pulse_hours < 1)) {
            bad(fmt::format("event '{}' period and pulse length must be positive", e.id));
        }
        if (e.start < start || e.start + static_cast<std::int64_t>(e.duration_hours) > end) {
            bad(fmt::format("event '{}' lies outside the scenario duration", e.id));
        }
    }
    for (std::size_t i = 0; i < events.size(); ++i) {
        for (std::size_t j = i + 1; j < events.size(); ++j) {
            const auto& a = events[i];
            const auto& b = events[j];
            const bool shared = std::any_of(a.channels.begin(), a.channels.end(), [&](std::size_t c) {
                return std::find(b.channels.begin(), b.channels.end(), c) != b.channels.end();
            });
            if (!shared) {
                continue;
            }
            for (const auto& sa : a.active_spans()) {
                for (const auto& sb : b.active_spans()) {
                    if (sa.overlaps(sb)) {
                        bad(fmt::format("events '{}' and '{}' overlap on a shared channel", a.id, b.id));
                    }
                }
            }
        }
    }
    for (std::size_t i = 0; i < events.size(); ++i) {
        for (std::size_t j = i + 1; j < events.size(); ++j) {
            if (events[i].id == events[j].id) {
                bad(fmt::format("duplicate event id '{}'", events[i].id));
            }
        }
    }
}

Generated generate(const Scenario& scenario) {
    scenario.validate();
    const auto& tm = scenario.temperature;
    const auto& cm = scenario.covariates;
    Rng temp_rng(Rng::derive(scenario.seed, kTemperatureStream));
    Rng target_rng(Rng::derive(scenario.seed, kTargetStream));
    Rng rain_rng(Rng::derive(scenario.seed, kRainStream));
    Rng humidity_rng(Rng::derive(scenario.seed, kHumidityStream));
    Rng wind_rng(Rng::derive(scenario.seed, kWindStream));

    Generated out;
    out.series.provenance = fmt::format("synthetic scenario, seed {}", scenario.seed);
    out.series.samples.reserve(scenario.duration_hours);
    double residual = 0.0;
    bool raining = false;
    double wind_anomaly = 0.0;
    double direction = 225.0;
    for (std::size_t h = 0; h < scenario.duration_hours; ++h) {
        const HourStamp t = scenario.start + static_cast<std::int64_t>(h);
        MonitoringSample s = missing_sample(t);
        s.present.set();

        const double hour_of_day = static_cast<double>(s.calendar.hour - 1);
        const double day = static_cast<double>(h) / 24.0;
        const double daily = tm.daily_amplitude_c * std::cos(kTwoPi * (hour_of_day - tm.daily_peak_hour) / 24.0);
        const double seasonal =
            tm.seasonal_amplitude_c * std::cos(kTwoPi * (day - tm.seasonal_peak_day) / kDaysPerYear);
        residual = tm.ar_coefficient * residual + tm.innovation_sd_c * temp_rng.gaussian();
        const double anomaly_c = daily + seasonal + residual;
        s.covariates[kTemperature] = tm.mean_c + anomaly_c;

        for (std::size_t c = 0; c < kTargets; ++c) {
            s.targets[c] = scenario.baseline_hz[c] + scenario.temperature_coupling_hz_per_c[c] * anomaly_c +
                           scenario.noise_sd_hz[c] * target_rng.gaussian();
        }

        if (raining) {
            raining = rain_rng.uniform() >= cm.rain_stop_probability;
        } else {
            raining = rain_rng.uniform() < cm.rain_start_probability;
        }
        const double intensity = -cm.rain_mean_mm * std::log1p(-rain_rng.uniform());
        s.covariates[kRainfall] = raining ? intensity : 0.0;

        const double humidity = cm.humidity_mean_pct + cm.humidity_per_degree * anomaly_c +
                                (raining ? 15.0 : 0.0) + cm.humidity_sd_pct * humidity_rng.gaussian();
        s.covariates[kHumidity] = std::clamp(humidity, 0.0, 100.0);

        wind_anomaly = 0.9 * wind_anomaly + cm.wind_sd_ms * std::sqrt(1.0 - 0.81) * wind_rng.gaussian();
        const double avg = std::abs(cm.wind_mean_ms + wind_anomaly);
        s.covariates[kWindAvg] = avg;
        s.covariates[kWindPeak] = avg * (1.2 + 0.6 * wind_rng.uniform());
        direction = std::fmod(direction + cm.wind_direction_sd_deg * wind_rng.gaussian(), 360.0);
        if (direction < 0.0) {
            direction += 360.0;
        }
        s.covariates[kWindDir] = direction >= 360.0 ? 0.0 : direction;
        out.series.samples.push_back(s);
    }

    out.labels.resize(scenario.duration_hours);
    for (std::size_t h = 0; h < scenario.duration_hours; ++h) {
        out.labels[h].timestamp = scenario.start + static_cast<std::int64_t>(h);
    }
    for (const auto& e : scenario.events) {
        const auto spans = e.active_spans();
        for (std::size_t k = 0; k < spans.size(); ++k) {
            const std::string label_id =
                e.kind == EventKind::PeriodicChannel2 ? fmt::format("{}#{}", e.id, k) : e.id;
            for (HourStamp t = spans[k].from; t < spans[k].to; t = t + 1) {
                const auto idx = static_cast<std::size_t>(t - scenario.start);
                auto& s = out.series.samples[idx];
                for (const auto c : e.channels) {
                    s.targets[c] += e.sign * e.magnitude * scenario.noise_sd_hz[c];
                }
                out.labels[idx].anomalous = true;
                if (out.labels[idx].event_id.empty()) {
                    out.labels[idx].event_id = label_id;
                } else {
                    out.labels[idx].event_id += "+" + label_id;
                }
            }
        }
    }
    for (auto& s : out.series.samples) {
        for (std::size_t c = 0; c < kTargets; ++c) {
            if (!(s.targets[c] > 0.0)) {
                fail(ErrorKind::Config, fmt::format("scenario produces a non-positive frequency on channel {} at {}",
                                                    c + 1, format_timestamp(s.timestamp)));
            }
        }
    }
    return out;
}

// --- scenario files -----------------------------------------------------------

namespace {

template <typename T>
void read_if(const json& j, const char* key, T& dst) {
    if (j.contains(key)) {
        dst = j.at(key).get<T>();
    }
}

void read_targets(const json& j, const char* key, TargetVec& dst) {
    if (!j.contains(key)) {
        return;
    }
    const auto v = j.at(key).get<std::vector<double>>();
    if (v.size() != kTargets) {
        fail(ErrorKind::Config, fmt::format("scenario field '{}' needs {} values", key, kTargets));
    }
    std::copy(v.begin(), v.end(), dst.begin());
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> known, std::string_view where) {
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            fail(ErrorKind::Config, fmt::format("unknown scenario key '{}' in {}", key, where));
        }
    }
}

}  // namespace

Scenario scenario_from_json(std::string_view text) {
    Scenario sc;
    try {
        const json j = json::parse(text);
        if (!j.is_object()) {
            fail(ErrorKind::Config, "scenario must be a JSON object");
        }
        reject_unknown(j,
                       {"start", "duration_hours", "baseline_hz", "temperature_coupling_hz_per_c", "noise_sd_hz",
                        "temperature", "covariates", "events", "seed"},
                       "scenario");
        if (j.contains("start")) {
            sc.start = parse_timestamp(j.at("start").get<std::string>(), true);
        }
        read_if(j, "duration_hours", sc.duration_hours);
        read_targets(j, "baseline_hz", sc.baseline_hz);
        read_targets(j, "temperature_coupling_hz_per_c", sc.temperature_coupling_hz_per_c);
        read_targets(j, "noise_sd_hz", sc.noise_sd_hz);
        read_if(j, "seed", sc.seed);
        if (j.contains("temperature")) {
            const auto& t = j.at("temperature");
            reject_unknown(t,
                           {"mean_c", "daily_amplitude_c", "daily_peak_hour", "seasonal_amplitude_c",
                            "seasonal_peak_day", "ar_coefficient", "innovation_sd_c"},
                           "temperature");
            read_if(t, "mean_c", sc.temperature.mean_c);
            read_if(t, "daily_amplitude_c", sc.temperature.daily_amplitude_c);
            read_if(t, "daily_peak_hour", sc.temperature.daily_peak_hour);
            read_if(t, "seasonal_amplitude_c", sc.temperature.seasonal_amplitude_c);
            read_if(t, "seasonal_peak_day", sc.temperature.seasonal_peak_day);
            read_if(t, "ar_coefficient", sc.temperature.ar_coefficient);
            read_if(t, "innovation_sd_c", sc.temperature.innovation_sd_c);
        }
        if (j.contains("covariates")) {
            const auto& c = j.at("covariates");
            reject_unknown(c,
                           {"rain_start_probability", "rain_stop_probability", "rain_mean_mm", "humidity_mean_pct",
                            "humidity_per_degree", "humidity_sd_pct", "wind_mean_ms", "wind_sd_ms",
                            "wind_direction_sd_deg"},
                           "covariates");
            read_if(c, "rain_start_probability", sc.covariates.rain_start_probability);
            read_if(c, "rain_stop_probability", sc.covariates.rain_stop_probability);
            read_if(c, "rain_mean_mm", sc.covariates.rain_mean_mm);
            read_if(c, "humidity_mean_pct", sc.covariates.humidity_mean_pct);
            read_if(c, "humidity_per_degree", sc.covariates.humidity_per_degree);
            read_if(c, "humidity_sd_pct", sc.covariates.humidity_sd_pct);
            read_if(c, "wind_mean_ms", sc.covariates.wind_mean_ms);
            read_if(c, "wind_sd_ms", sc.covariates.wind_sd_ms);
            read_if(c, "wind_direction_sd_deg", sc.covariates.wind_direction_sd_deg);
        }
        if (j.contains("events")) {
            std::size_t index = 0;
            for (const auto& ej : j.at("events")) {
                reject_unknown(ej,
                               {"id", "kind", "start", "duration_hours", "magnitude", "sign", "channels",
                                "period_hours", "pulse_hours"},
                               "event");
                AnomalyEvent e;
                e.id = ej.value("id", fmt::format("e{}", index));
                e.kind = parse_event_kind(ej.at("kind").get<std::string>());
                e.start = parse_timestamp(ej.at("start").get<std::string>(), true);
                read_if(ej, "duration_hours", e.duration_hours);
                read_if(ej, "magnitude", e.magnitude);
                read_if(ej, "sign", e.sign);
                read_if(ej, "period_hours", e.period_hours);
                read_if(ej, "pulse_hours", e.pulse_hours);
                if (ej.contains("channels")) {
                    for (const auto c : ej.at("channels").get<std::vector<int>>()) {
                        if (c < 1 || c > static_cast<int>(kTargets)) {
                            fail(ErrorKind::Config,
                                 fmt::format("event '{}' references channel {} (valid 1..{})", e.id, c, kTargets));
                        }
                        e.channels.push_back(static_cast<std::size_t>(c - 1));
                    }
                } else if (e.kind == EventKind::PeriodicChannel2) {
                    e.channels = {1};
                }
                sc.events.push_back(std::move(e));
                ++index;
            }
        }
    } catch (const json::exception& e) {
        fail(ErrorKind::Config, fmt::format("bad scenario file: {}", e.what()));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Config) {
            throw;
        }
        fail(ErrorKind::Config, fmt::format("bad scenario file: {}", e.what()));
    }
    sc.validate();
    return sc;
}

std::string scenario_to_json(const Scenario& sc) {
    auto vec = [](const TargetVec& v) { return std::vector<double>(v.begin(), v.end()); };
    json j;
    j["start"] = format_timestamp(sc.start);
    j["duration_hours"] = sc.duration_hours;
    j["baseline_hz"] = vec(sc.baseline_hz);
    j["temperature_coupling_hz_per_c"] = vec(sc.temperature_coupling_hz_per_c);
    j["noise_sd_hz"] = vec(sc.noise_sd_hz);
    j["seed"] = sc.seed;
    j["temperature"] = {{"mean_c", sc.temperature.mean_c},
                        {"daily_amplitude_c", sc.temperature.daily_amplitude_c},
                        {"daily_peak_hour", sc.temperature.daily_peak_hour},
                        {"seasonal_amplitude_c", sc.temperature.seasonal_amplitude_c},
                        {"seasonal_peak_day", sc.temperature.seasonal_peak_day},
                        {"ar_coefficient", sc.temperature.ar_coefficient},
                        {"innovation_sd_c", sc.temperature.innovation_sd_c}};
    j["covariates"] = {{"rain_start_probability", sc.covariates.rain_start_probability},
                       {"rain_stop_probability", sc.covariates.rain_stop_probability},
                       {"rain_mean_mm", sc.covariates.rain_mean_mm},
                       {"humidity_mean_pct", sc.covariates.humidity_mean_pct},
                       {"humidity_per_degree", sc.covariates.humidity_per_degree},
                       {"humidity_sd_pct", sc.covariates.humidity_sd_pct},
                       {"wind_mean_ms", sc.covariates.wind_mean_ms},
                       {"wind_sd_ms", sc.covariates.wind_sd_ms},
                       {"wind_direction_sd_deg", sc.covariates.wind_direction_sd_deg}};
    json events = json::array();
    for (const auto& e : sc.events) {
        std::vector<int> channels;
        for (const auto c : e.channels) {
            channels.push_back(static_cast<int>(c) + 1);
        }
        json ej = {{"id", e.id},
                   {"kind", std::string(event_kind_name(e.kind))},
                   {"start", format_timestamp(e.start)},
                   {"duration_hours", e.duration_hours},
                   {"magnitude", e.magnitude},
                   {"sign", e.sign},
                   {"channels", channels}};
        if (e.kind == EventKind::PeriodicChannel2) {
            ej["period_hours"] = e.period_hours;
            ej["pulse_hours"] = e.pulse_hours;
        }
        events.push_back(ej);
    }
    j["events"] = events;
    return j.dump(2) + "\n";
}

// --- labels ---------------------------------------------------------------------

std::string write_labels_csv(std::span<const Label> labels) {
    std::string out = "timestamp,is_anomaly,event_id\n";
    for (const auto& l : labels) {
        out += fmt::format("{},{},{}\n", format_timestamp(l.timestamp), l.anomalous ? 1 : 0, l.event_id);
    }
    return out;
}

std::vector<Label> parse_labels_csv(std::string_view text) {
    std::vector<Label> labels;
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
            if (line != "timestamp,is_anomaly,event_id") {
                fail(ErrorKind::Parse, fmt::format("labels line {}: unexpected header '{}'", line_no, line));
            }
            header = false;
            continue;
        }
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
        if (c2 == std::string_view::npos) {
            fail(ErrorKind::Parse, fmt::format("labels line {}: malformed row", line_no));
        }
        Label l;
        try {
            l.timestamp = parse_timestamp(line.substr(0, c1));
        } catch (const Error& e) {
            fail(ErrorKind::Parse, fmt::format("labels line {}: {}", line_no, e.what()));
        }
        const auto flag = line.substr(c1 + 1, c2 - c1 - 1);
        if (flag != "0" && flag != "1") {
            fail(ErrorKind::Parse, fmt::format("labels line {}: is_anomaly must be 0 or 1", line_no));
        }
        l.anomalous = flag == "1";
        l.event_id = std::string(line.substr(c2 + 1));
        if (!labels.empty() && !(labels.back().timestamp < l.timestamp)) {
            fail(ErrorKind::Parse, fmt::format("labels line {}: timestamps must be strictly increasing", line_no));
        }
        labels.push_back(std::move(l));
    }
    if (header) {
        fail(ErrorKind::Parse, "labels file is empty");
    }
    return labels;
}

// --- evaluation -----------------------------------------------------------------

std::vector<EventOutcome> label_events(std::span<const Label> labels) {
    std::vector<EventOutcome> events;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!labels[i].anomalous) {
            continue;
        }
        const bool continues = !events.empty() && i > 0 && labels[i - 1].anomalous &&
                               labels[i - 1].event_id == labels[i].event_id &&
                               labels[i].timestamp - labels[i - 1].timestamp == 1;
        if (continues) {
            events.back().span.to = labels[i].timestamp + 1;
        } else {
            EventOutcome e;
            e.id = labels[i].event_id;
            e.span = TimeRange{labels[i].timestamp, labels[i].timestamp + 1};
            events.push_back(std::move(e));
        }
    }
    return events;
}

EvalReport evaluate(std::span<const AnomalyRecord> records, std::span<const Label> labels, int tolerance_hours,
                    double threshold) {
    if (tolerance_hours < 0) {
        fail(ErrorKind::Config, "match tolerance must be non-negative");
    }
    EvalReport report;
    report.tolerance_hours = tolerance_hours;
    report.threshold = threshold;

    {
        std::size_t li = 0;
        for (const auto& r : records) {
            while (li < labels.size() && labels[li].timestamp < r.timestamp) {
                ++li;
            }
            if (li == labels.size() || labels[li].timestamp != r.timestamp) {
                fail(ErrorKind::Data,
                     fmt::format("timeline mismatch: no label for record at {}", format_timestamp(r.timestamp)));
            }
        }
    }

    auto all_events = label_events(labels);
    const auto tol = static_cast<std::int64_t>(tolerance_hours);
    auto tolerated = [&](const EventOutcome& e, HourStamp t) { return e.span.from - tol <= t && t < e.span.to + tol; };

    std::vector<EventOutcome> events;
    if (!records.empty()) {
        const TimeRange covered{records.front().timestamp, records.back().timestamp + 1};
        for (auto& e : all_events) {
            if (e.span.overlaps(covered)) {
                events.push_back(e);
            }
        }
    }

    for (const auto& r : records) {
        if (!r.scored) {
            continue;
        }
        const bool detection = r.anomalous && r.score >= threshold;
        bool near_event = false;
        for (const auto& e : all_events) {
            near_event = near_event || tolerated(e, r.timestamp);
        }
        for (auto& e : events) {
            if (tolerated(e, r.timestamp) && detection) {
                if (!e.hit) {
                    e.first_detection = r.timestamp;
                }
                e.hit = true;
                e.max_score = std::max(e.max_score, r.score);
            }
        }
        if (!near_event) {
            ++report.clean_scored;
        }
        if (detection) {
            ++report.flagged;
            if (near_event) {
                ++report.true_flags;
            } else {
                ++report.false_flags;
            }
        }
    }

    report.events = events.size();
    report.hits = static_cast<std::size_t>(std::count_if(events.begin(), events.end(), [](const auto& e) { return e.hit; }));
    report.recall = report.events == 0 ? 0.0 : static_cast<double>(report.hits) / static_cast<double>(report.events);
    report.zero_flags = report.flagged == 0;
    report.precision =
        report.zero_flags ? 1.0 : static_cast<double>(report.true_flags) / static_cast<double>(report.flagged);
    report.f1 = report.precision + report.recall > 0.0
                    ? 2.0 * report.precision * report.recall / (report.precision + report.recall)
                    : 0.0;
    report.false_positive_rate = report.clean_scored == 0 ? 0.0
                                                           : static_cast<double>(report.false_flags) /
                                                                 static_cast<double>(report.clean_scored);
    report.per_event = std::move(events);
    return report;
}

std::string eval_report_to_json(const EvalReport& r) {
    json events = json::array();
    for (const auto& e : r.per_event) {
        events.push_back({{"id", e.id},
                          {"start", format_timestamp(e.span.from)},
                          {"end", format_timestamp(e.span.to)},
                          {"hit", e.hit},
                          {"first_detection", e.first_detection ? json(format_timestamp(*e.first_detection)) : json()},
                          {"max_score", e.max_score}});
    }
    json j = {{"precision", r.precision},
              {"recall", r.recall},
              {"f1", r.f1},
              {"false_positive_rate", r.false_positive_rate},
              {"events", r.events},
              {"hits", r.hits},
              {"flagged", r.flagged},
              {"true_flags", r.true_flags},
              {"false_flags", r.false_flags},
              {"clean_scored", r.clean_scored},
              {"zero_flags", r.zero_flags},
              {"tolerance_hours", r.tolerance_hours},
              {"threshold", r.threshold},
              {"per_event", events}};
    if (r.zero_flags) {
        j["note"] = "no detections: precision reported as 1 by convention";
    }
    return j.dump(2) + "\n";
}

}  // namespace fqs
