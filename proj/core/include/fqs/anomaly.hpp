#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fqs/forecaster.hpp"
#include "fqs/series.hpp"

namespace fqs {

enum class WeightMode { InverseMeanFrequency, Uniform };

WeightMode parse_weight_mode(std::string_view name);
std::string_view weight_mode_name(WeightMode mode);

struct DetectorConfig {
    /// Upper percentile p; the band is [pi_(100-p), pi_p]. Must be 75, 90 or 99.
    int percentile = 99;
    std::size_t window_length = 96;
    WeightMode weights = WeightMode::InverseMeanFrequency;

    void validate() const;
};

/// Quantile indices (lower, upper) bounding the band for percentile p.
std::pair<std::size_t, std::size_t> band_indices(int percentile);

struct ChannelVerdict {
    std::size_t channel = 0;
    double observed = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool violated = false;
    double deviation = 0.0;
};

struct AnomalyRecord {
    HourStamp timestamp;
    /// False when no valid window precedes this timestep.
    bool scored = false;
    std::array<ChannelVerdict, kTargets> channels{};
    double score = 0.0;
    bool anomalous = false;
    std::optional<ForecastDistribution> forecast;
};

/// Per channel: true when the observation lies strictly outside
/// [pi_(100-p), pi_p]. Equality with a bound is not anomalous.
std::array<bool, kTargets> detect_point(const TargetVec& observed, const ForecastDistribution& dist, int percentile);

/// Distance from the band in Hz: max(0, lower - observed, observed - upper).
double deviation(double observed, double lower, double upper);

/// Sum of deviation_c / reference_c. References are the training mean
/// frequencies (or ones for uniform weighting).
double weighted_score(std::span<const double, kTargets> deviations, std::span<const double, kTargets> reference);

/// Score references implied by the weight mode.
TargetVec score_reference(const ModelState& model, WeightMode mode);

/// Assembles the record for one observation against its forecast.
AnomalyRecord assess(HourStamp t, const TargetVec& observed, const ForecastDistribution& dist,
                     const DetectorConfig& config, const TargetVec& reference);

/// One record per sample of the series, in timestamp order. Timesteps whose
/// preceding window is incomplete are emitted unscored.
std::vector<AnomalyRecord> run_sliding(const ModelState& model, const Series& series, const DetectorConfig& config,
                                       std::size_t threads = 1);

}  // namespace fqs
