#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fqs/series.hpp"

namespace fqs {

inline constexpr std::size_t kQuantiles = 7;
inline constexpr std::array<double, kQuantiles> kQuantileLevels{0.01, 0.10, 0.25, 0.50, 0.75, 0.90, 0.99};
inline constexpr std::size_t kMedianIndex = 3;

struct ModelConfig {
    std::size_t window_length = 96;
    std::size_t hidden = 16;
    std::size_t heads = 2;
    std::size_t blocks = 1;
    std::size_t hour_embedding = 4;
    std::size_t day_embedding = 4;
    std::size_t month_embedding = 4;
    double dropout = 0.0;
    double learning_rate = 1e-3;
    std::size_t batch_size = 64;
    std::size_t max_epochs = 40;
    std::size_t patience = 5;
    double validation_fraction = 0.2;
    /// Weight of the squared-error term of the mean head.
    double mean_loss_weight = 1.0;
    std::uint64_t seed = 0;

    bool operator==(const ModelConfig&) const = default;

    /// Throws Error(Config) describing the first invalid field.
    void validate() const;
    std::size_t feed_forward_width() const { return 2 * hidden; }
    std::size_t feature_width() const;
};

/// A named parameter block stored row-major inside the flat parameter vector.
struct ParamBlock {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t offset = 0;

    std::size_t size() const { return rows * cols; }
};

/// Canonical parameter order for a configuration.
std::vector<ParamBlock> param_layout(const ModelConfig& config);
std::size_t param_count(const ModelConfig& config);

struct EpochLog {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double validation_loss = 0.0;

    bool operator==(const EpochLog&) const = default;
};

struct ModelState {
    ModelConfig config;
    NormStats norm;
    std::vector<double> params;
    std::vector<EpochLog> log;
    std::size_t best_epoch = 0;
    /// Label-time span covered by training and validation windows.
    std::optional<TimeRange> training_range;

    bool operator==(const ModelState&) const = default;
};

struct ChannelForecast {
    double mean = 0.0;
    std::array<double, kQuantiles> quantiles{};
};

/// Predicted distribution of the next hour's targets, in Hz.
struct ForecastDistribution {
    std::array<ChannelForecast, kTargets> channels{};
};

/// Index of a level in kQuantileLevels, or nullopt when the level is not modeled.
std::optional<std::size_t> quantile_index(double level);

// --- model operations ---------------------------------------------------------

/// Parameters drawn uniformly in +-1/sqrt(fan_in); biases start at zero.
ModelState init(const ModelConfig& config, std::uint64_t seed);

ForecastDistribution forward(const ModelState& model, const Window& window);

/// Orders the quantiles by construction: the median is kept, and the other
/// levels are reached through cumulative softplus increments on each side.
/// `up` holds raw increments for 0.75, 0.90, 0.99; `down` for 0.25, 0.10, 0.01.
std::array<double, kQuantiles> decode_quantiles(double median, std::span<const double, 3> up,
                                                std::span<const double, 3> down);

double softplus(double x);
double sigmoid(double x);

/// max(q (y - qhat), (q - 1)(y - qhat))
double pinball_loss(double y, double qhat, double q);

/// Derivative of pinball_loss with respect to qhat. At the kink the (q - 1)
/// branch is used.
double pinball_gradient(double y, double qhat, double q);

/// Mean over windows and channels of the summed pinball losses plus
/// mean_loss_weight times the squared error of the mean head, all in
/// standardized units.
double batch_loss(const ModelState& model, std::span<const Window> batch);

/// Exact reverse-mode gradient of batch_loss. Throws Error(Numeric) naming the
/// first non-finite parameter gradient.
std::vector<double> gradients(const ModelState& model, std::span<const Window> batch);

struct LossAndGradient {
    double loss = 0.0;
    std::vector<double> gradient;
};

/// Options that affect speed or reporting but never the result.
struct ComputeOptions {
    std::size_t threads = 1;
};

/// Loss and gradient in one pass. With a dropout seed the configured dropout is
/// applied using masks derived from (seed, window position in batch).
LossAndGradient loss_and_gradient(const ModelState& model, std::span<const Window> batch,
                                  std::optional<std::uint64_t> dropout_seed = std::nullopt,
                                  const ComputeOptions& options = {});

struct TrainOptions {
    std::size_t threads = 1;
    std::function<void(const EpochLog&)> on_epoch;
};

/// Chronological split of the windows (first part trains, last part
/// validates), adaptive-moment mini-batch descent, early stopping on the
/// validation loss. Returns the best validation state.
ModelState train(const Series& series, const ModelConfig& config, const TrainOptions& options = {});

/// Standardized per-timestep feature matrix of a window (continuous part only).
std::vector<double> continuous_features(const NormStats& norm, const MonitoringSample& s);

}  // namespace fqs
