#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "fqs/error.hpp"
#include "fqs/forecaster.hpp"
#include "fqs/random.hpp"

namespace fqs {

namespace {

/// Adaptive moment estimation with bias correction.
class AdamState {
public:
    AdamState(std::size_t n, double lr) : m_(n, 0.0), v_(n, 0.0), lr_(lr) {}

    void step(std::vector<double>& params, const std::vector<double>& grad) {
        ++t_;
        const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grad[i];
            v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grad[i] * grad[i];
            const double m_hat = m_[i] / c1;
            const double v_hat = v_[i] / c2;
            params[i] -= lr_ * m_hat / (std::sqrt(v_hat) + kEps);
        }
    }

private:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

    std::vector<double> m_;
    std::vector<double> v_;
    double lr_;
    std::uint64_t t_ = 0;
};

}  // namespace

ModelState train(const Series& series, const ModelConfig& config, const TrainOptions& options) {
    config.validate();
    const auto windows = build_windows(series, config.window_length);
    const auto n_val = static_cast<std::size_t>(
        std::ceil(config.validation_fraction * static_cast<double>(windows.size())));
    if (windows.size() < 2 || n_val < 1 || n_val >= windows.size()) {
        fail(ErrorKind::Data, fmt::format("insufficient data: {} windows of length {} (need at least one for "
                                          "training and one for validation)",
                                          windows.size(), config.window_length));
    }
    const std::size_t n_train = windows.size() - n_val;
    const std::span<const Window> train_set(windows.data(), n_train);
    const std::span<const Window> val_set(windows.data() + n_train, n_val);

    ModelState model = init(config, config.seed);
    const HourStamp stats_end = train_set.back().label_time + 1;
    model.norm = compute_stats(series, TimeRange{series.first(), stats_end});
    model.training_range = TimeRange{windows.front().label_time, windows.back().label_time + 1};
    if (config.max_epochs == 0) {
        return model;
    }

    ModelState best = model;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    AdamState adam(model.params.size(), config.learning_rate);
    std::vector<std::size_t> order(n_train);
    for (std::size_t i = 0; i < n_train; ++i) {
        order[i] = i;
    }
    std::vector<Window> batch;
    batch.reserve(config.batch_size);
    const ComputeOptions compute{options.threads};

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        Rng shuffle_rng(Rng::derive(config.seed, 1'000'000 + epoch));
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t step = 0;
        for (std::size_t start = 0; start < n_train; start += config.batch_size, ++step) {
            const std::size_t end = std::min(n_train, start + config.batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) {
                batch.push_back(train_set[order[i]]);
            }
            const std::uint64_t dropout_seed = Rng::derive(config.seed, (epoch << 32) + step);
            const auto lg = loss_and_gradient(model, batch, dropout_seed, compute);
            if (!std::isfinite(lg.loss)) {
                fail(ErrorKind::Numeric, fmt::format("training diverged at epoch {} (non-finite loss)", epoch));
            }
            loss_sum += lg.loss * static_cast<double>(batch.size());
            adam.step(model.params, lg.gradient);
        }

        EpochLog entry;
        entry.epoch = epoch;
        entry.train_loss = loss_sum / static_cast<double>(n_train);
        entry.validation_loss = batch_loss(model, val_set);
        if (!std::isfinite(entry.validation_loss)) {
            fail(ErrorKind::Numeric, fmt::format("training diverged at epoch {} (non-finite validation loss)", epoch));
        }
        model.log.push_back(entry);
        if (options.on_epoch) {
            options.on_epoch(entry);
        }

        if (entry.validation_loss < best_val) {
            best_val = entry.validation_loss;
            since_best = 0;
            best.params = model.params;
            best.best_epoch = epoch;
        } else if (++since_best >= config.patience) {
            break;
        }
    }
    best.log = model.log;
    return best;
}

}  // namespace fqs
