#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fqs/anomaly.hpp"
#include "fqs/series.hpp"

namespace fqs {

enum class EventKind { Spike, StepShift, PeriodicChannel2, MultiChannelTransient };

EventKind parse_event_kind(std::string_view name);
std::string_view event_kind_name(EventKind kind);

/// An injected anomaly: a constant offset of sign * magnitude * sigma_c on each
/// affected channel. Periodic events repeat a pulse of pulse_hours every
/// period_hours inside [start, start + duration).
struct AnomalyEvent {
    std::string id;
    EventKind kind = EventKind::Spike;
    HourStamp start;
    std::size_t duration_hours = 1;
    double magnitude = 1.0;
    double sign = 1.0;
    std::vector<std::size_t> channels;  // zero-based
    std::size_t period_hours = 168;
    std::size_t pulse_hours = 1;

    /// Half-open hour intervals where the offset applies.
    std::vector<TimeRange> active_spans() const;
};

struct TemperatureModel {
    double mean_c = 14.0;
    double daily_amplitude_c = 4.0;
    /// Hour of day with the daily maximum.
    double daily_peak_hour = 15.0;
    double seasonal_amplitude_c = 6.0;
    /// Days after the scenario start at which the seasonal cycle peaks.
    double seasonal_peak_day = 0.0;
    /// AR(1) residual: x_t = coefficient * x_(t-1) + innovation_sd * N(0, 1).
    double ar_coefficient = 0.95;
    double innovation_sd_c = 0.3;
};

struct CovariateModel {
    double rain_start_probability = 0.02;
    double rain_stop_probability = 0.25;
    double rain_mean_mm = 1.5;
    double humidity_mean_pct = 70.0;
    /// Humidity change per degree above the mean temperature.
    double humidity_per_degree = -2.0;
    double humidity_sd_pct = 4.0;
    double wind_mean_ms = 3.0;
    double wind_sd_ms = 1.0;
    double wind_direction_sd_deg = 15.0;
};

struct Scenario {
    HourStamp start;
    std::size_t duration_hours = 24 * 120;
    TargetVec baseline_hz{1.0, 1.1, 3.0, 4.2, 5.9};
    TargetVec temperature_coupling_hz_per_c{0.004, 0.004, 0.009, 0.012, 0.016};
    TargetVec noise_sd_hz{0.004, 0.0045, 0.009, 0.012, 0.016};
    TemperatureModel temperature;
    CovariateModel covariates;
    std::vector<AnomalyEvent> events;
    std::uint64_t seed = 1;

    /// Throws Error(Config); overlapping events on a shared channel are named.
    void validate() const;
};

struct Label {
    HourStamp timestamp;
    bool anomalous = false;
    /// Event instance id; periodic pulses are suffixed "#k".
    std::string event_id;

    bool operator==(const Label&) const = default;
};

struct Generated {
    Series series;
    std::vector<Label> labels;
};

/// clean = baseline + coupling * (daily + seasonal + AR residual) + N(0, sigma);
/// events are added on top. Random streams are independent of the events, so
/// samples outside event spans match the clean generation bit for bit.
Generated generate(const Scenario& scenario);

Scenario scenario_from_json(std::string_view text);
std::string scenario_to_json(const Scenario& scenario);

std::string write_labels_csv(std::span<const Label> labels);
std::vector<Label> parse_labels_csv(std::string_view text);

// --- evaluation -------------------------------------------------------------

struct EventOutcome {
    std::string id;
    TimeRange span;
    bool hit = false;
    std::optional<HourStamp> first_detection;
    double max_score = 0.0;
};

struct EvalReport {
    double precision = 1.0;
    double recall = 0.0;
    double f1 = 0.0;
    double false_positive_rate = 0.0;
    std::size_t events = 0;
    std::size_t hits = 0;
    std::size_t flagged = 0;
    std::size_t true_flags = 0;
    std::size_t false_flags = 0;
    std::size_t clean_scored = 0;
    /// Set when nothing was flagged; precision is then reported as 1.
    bool zero_flags = false;
    int tolerance_hours = 0;
    double threshold = 0.0;
    std::vector<EventOutcome> per_event;
};

/// Contiguous runs of anomalous labels sharing an event id.
std::vector<EventOutcome> label_events(std::span<const Label> labels);

/// A record is a detection when it is scored, anomalous and scores at least
/// `threshold`. An event is hit by any detection within +-tolerance of its
/// span; detections outside every tolerated span are false positives.
EvalReport evaluate(std::span<const AnomalyRecord> records, std::span<const Label> labels, int tolerance_hours,
                    double threshold);

std::string eval_report_to_json(const EvalReport& report);

}  // namespace fqs
