#pragma once

#include <array>
#include <bitset>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fqs/timestamp.hpp"

namespace fqs {

inline constexpr std::size_t kTargets = 5;
inline constexpr std::size_t kCovariates = 6;
inline constexpr std::size_t kFields = kTargets + kCovariates;

/// Raw environmental columns, in CSV order.
enum Covariate : std::size_t {
    kTemperature = 0,
    kRainfall,
    kHumidity,
    kWindAvg,
    kWindPeak,
    kWindDir,
};

/// Continuous covariate features fed to the model: the five scalar covariates
/// followed by the wind direction as (cos, sin).
inline constexpr std::size_t kModelCovariates = 7;

using TargetVec = std::array<double, kTargets>;

struct ChannelInfo {
    std::string_view name;
    std::string_view unit;
};

/// Canonical CSV column order after `timestamp`.
const std::array<ChannelInfo, kFields>& channel_info();

/// The canonical CSV header line (without line terminator).
std::string canonical_header();

/// One hourly observation. Field indices 0..4 address targets, 5..10 covariates.
struct MonitoringSample {
    HourStamp timestamp;
    TargetVec targets{};
    std::array<double, kCovariates> covariates{};
    Fingerprint calendar;
    std::bitset<kFields> present;
    std::bitset<kFields> synthetic;

    double field(std::size_t i) const { return i < kTargets ? targets[i] : covariates[i - kTargets]; }
    double& field(std::size_t i) { return i < kTargets ? targets[i] : covariates[i - kTargets]; }

    bool complete() const { return present.all(); }
    bool genuine_targets() const;

    bool operator==(const MonitoringSample&) const = default;
};

/// Sample with every field missing, used to restore the hourly grid.
MonitoringSample missing_sample(HourStamp t);

/// Ordered hourly samples with a free-form provenance note.
struct Series {
    std::vector<MonitoringSample> samples;
    std::string provenance;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }

    HourStamp first() const { return samples.front().timestamp; }
    HourStamp last() const { return samples.back().timestamp; }
};

/// Samples with timestamps in the half-open interval [from, to).
Series slice(const Series& series, HourStamp from, HourStamp to);

struct TimeRange {
    HourStamp from;
    HourStamp to;  // exclusive

    bool contains(HourStamp t) const { return from <= t && t < to; }
    bool overlaps(const TimeRange& o) const { return from < o.to && o.from < to; }
    bool operator==(const TimeRange&) const = default;
};

// --- CSV ------------------------------------------------------------------

Series parse_csv(std::string_view text);

/// Writes the canonical CSV. decimals < 0 selects the shortest representation
/// that round-trips exactly.
std::string write_csv(const Series& series, int decimals = -1);

/// Checks the per-sample range constraints. Throws Error(Data) naming the field.
void validate_sample(const MonitoringSample& s);

// --- gaps -----------------------------------------------------------------

struct GapPolicy {
    enum class Kind { LinearInterpolate, CarryForward, DropWindow };

    Kind kind = Kind::LinearInterpolate;
    int max_gap_hours = 3;
};

GapPolicy::Kind parse_gap_policy(std::string_view name);

/// Restores the constant 1-hour grid and fills missing runs of at most
/// max_gap_hours according to the policy. Filled values are flagged synthetic.
/// Wind direction is interpolated along the shorter arc.
Series fill_gaps(const Series& series, const GapPolicy& policy);

// --- normalization ----------------------------------------------------------

/// Per-channel standardization statistics (sample std, n-1 denominator).
struct NormStats {
    TargetVec target_mean{};
    TargetVec target_std{};
    std::array<double, kModelCovariates> covariate_mean{};
    std::array<double, kModelCovariates> covariate_std{};

    bool operator==(const NormStats&) const = default;

    double standardize_target(std::size_t c, double v) const { return (v - target_mean[c]) / target_std[c]; }
    double destandardize_target(std::size_t c, double z) const { return z * target_std[c] + target_mean[c]; }
    double standardize_covariate(std::size_t c, double v) const {
        return (v - covariate_mean[c]) / covariate_std[c];
    }
    double destandardize_covariate(std::size_t c, double z) const {
        return z * covariate_std[c] + covariate_mean[c];
    }
};

/// Model-space covariates of a sample: temp, rain, humidity, wind avg, wind peak,
/// cos(dir), sin(dir).
std::array<double, kModelCovariates> model_covariates(const MonitoringSample& s);

/// Statistics over samples in `range`. Synthetic (gap-filled) values are skipped
/// unless include_synthetic is set.
NormStats compute_stats(const Series& series, const TimeRange& range, bool include_synthetic = false);

// --- windows ----------------------------------------------------------------

/// T consecutive input samples and the targets of the following hour.
/// The inputs view the Series they were built from, which must outlive the window.
struct Window {
    std::span<const MonitoringSample> inputs;
    TargetVec label{};
    HourStamp label_time;

    std::size_t length() const { return inputs.size(); }
};

/// Sliding windows with stride 1. An input sample is usable when every field is
/// present (gap-filled values allowed); a label must consist of genuine target
/// observations. Consecutive samples must be exactly one hour apart.
std::vector<Window> build_windows(const Series& series, std::size_t window_length);

/// Whether a window ending right before index `label_index` is valid.
bool window_valid_at(const Series& series, std::size_t label_index, std::size_t window_length);

}  // namespace fqs
