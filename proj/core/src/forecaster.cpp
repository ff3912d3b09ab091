#include "fqs/forecaster.hpp"

#include <cmath>

#include <fmt/format.h>

#include "fqs/autodiff.hpp"
#include "fqs/error.hpp"
#include "fqs/random.hpp"
#include "parallel.hpp"

namespace fqs {

namespace {

using ad::Matrix;
using ad::Tape;
using ad::Var;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr std::size_t kContinuous = kTargets + kModelCovariates;
constexpr std::size_t kHours = 24;
constexpr std::size_t kDays = 31;
constexpr std::size_t kMonths = 12;
constexpr std::size_t kQuantileHeadWidth = kTargets * kQuantiles;
constexpr std::size_t kWindowsPerChunk = 16;

struct BlockVars {
    Var query, key, value, out_weight, out_bias, ff1_weight, ff1_bias, ff2_weight, ff2_bias;
};

struct Network {
    std::vector<Var> leaves;  // layout order
    Var emb_hour, emb_day, emb_month, in_weight, in_bias, position;
    std::vector<BlockVars> blocks;
    Var mean_weight, mean_bias, quant_weight, quant_bias;
};

Network load_network(Tape& tape, const ModelConfig& config, const std::vector<ParamBlock>& layout,
                     std::span<const double> params) {
    Network net;
    net.leaves.reserve(layout.size());
    for (const auto& block : layout) {
        const Eigen::Map<const RowMajorMatrix> view(params.data() + block.offset, static_cast<Eigen::Index>(block.rows),
                                                    static_cast<Eigen::Index>(block.cols));
        net.leaves.push_back(tape.input(Matrix(view)));
    }
    std::size_t i = 0;
    auto next = [&] { return net.leaves[i++]; };
    net.emb_hour = next();
    net.emb_day = next();
    net.emb_month = next();
    net.in_weight = next();
    net.in_bias = next();
    net.position = next();
    for (std::size_t b = 0; b < config.blocks; ++b) {
        BlockVars bv;
        bv.query = next();
        bv.key = next();
        bv.value = next();
        bv.out_weight = next();
        bv.out_bias = next();
        bv.ff1_weight = next();
        bv.ff1_bias = next();
        bv.ff2_weight = next();
        bv.ff2_bias = next();
        net.blocks.push_back(bv);
    }
    net.mean_weight = next();
    net.mean_bias = next();
    net.quant_weight = next();
    net.quant_bias = next();
    return net;
}

Matrix dropout_mask(Rng& rng, Eigen::Index rows, Eigen::Index cols, double rate) {
    Matrix m(rows, cols);
    const double keep = 1.0 / (1.0 - rate);
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) {
            m(r, c) = rng.uniform() < rate ? 0.0 : keep;
        }
    }
    return m;
}

struct Heads {
    Var mean;      // 1 x kTargets
    Var quantile;  // 1 x kTargets*kQuantiles
};

void check_window(const ModelState& model, const Window& window) {
    if (window.length() != model.config.window_length) {
        fail(ErrorKind::Config, fmt::format("window length {} does not match model window length {}",
                                            window.length(), model.config.window_length));
    }
}

Heads run_network(Tape& tape, const Network& net, const ModelState& model, const Window& window, Rng* dropout) {
    const auto& cfg = model.config;
    const auto T = static_cast<Eigen::Index>(cfg.window_length);
    const auto H = static_cast<Eigen::Index>(cfg.hidden);
    const double rate = dropout ? cfg.dropout : 0.0;

    Matrix continuous(T, static_cast<Eigen::Index>(kContinuous));
    std::vector<int> hours(window.length()), days(window.length()), months(window.length());
    for (std::size_t t = 0; t < window.length(); ++t) {
        const auto& s = window.inputs[t];
        if (!s.complete()) {
            fail(ErrorKind::Data, fmt::format("window input at {} has missing values", format_timestamp(s.timestamp)));
        }
        const auto feats = continuous_features(model.norm, s);
        for (std::size_t k = 0; k < kContinuous; ++k) {
            if (!std::isfinite(feats[k])) {
                fail(ErrorKind::Data,
                     fmt::format("non-finite model input at {} (feature {})", format_timestamp(s.timestamp), k));
            }
            continuous(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = feats[k];
        }
        hours[t] = s.calendar.hour - 1;
        days[t] = s.calendar.day - 1;
        months[t] = s.calendar.month - 1;
    }

    const std::array<Var, 4> parts{tape.input(std::move(continuous)), tape.gather_rows(net.emb_hour, std::move(hours)),
                                   tape.gather_rows(net.emb_day, std::move(days)),
                                   tape.gather_rows(net.emb_month, std::move(months))};
    const Var features = tape.concat_cols(parts);
    Var z = tape.add(tape.add_row(tape.matmul(features, net.in_weight), net.in_bias), net.position);

    const auto head_width = H / static_cast<Eigen::Index>(cfg.heads);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(head_width));
    for (std::size_t b = 0; b < net.blocks.size(); ++b) {
        const auto& bv = net.blocks[b];
        // Only the final position feeds the heads, so the last block attends
        // from that position alone.
        const bool last = b + 1 == net.blocks.size();
        const Var zq = last ? tape.row(z, T - 1) : z;
        const Var q = tape.matmul(zq, bv.query);
        const Var k = tape.matmul(z, bv.key);
        const Var v = tape.matmul(z, bv.value);
        std::vector<Var> contexts;
        contexts.reserve(cfg.heads);
        for (std::size_t h = 0; h < cfg.heads; ++h) {
            const auto start = static_cast<Eigen::Index>(h) * head_width;
            const Var qh = tape.cols(q, start, head_width);
            const Var kh = tape.cols(k, start, head_width);
            const Var vh = tape.cols(v, start, head_width);
            const Var attn = tape.softmax_rows(tape.scale(tape.matmul_transposed(qh, kh), inv_sqrt_d));
            contexts.push_back(tape.matmul(attn, vh));
        }
        const Var context = cfg.heads == 1 ? contexts.front() : tape.concat_cols(contexts);
        Var attended = tape.add_row(tape.matmul(context, bv.out_weight), bv.out_bias);
        if (rate > 0.0) {
            const auto& val = tape.value(attended);
            attended = tape.mask(attended, dropout_mask(*dropout, val.rows(), val.cols(), rate));
        }
        const Var z1 = tape.add(zq, attended);
        Var hidden = tape.gelu(tape.add_row(tape.matmul(z1, bv.ff1_weight), bv.ff1_bias));
        if (rate > 0.0) {
            const auto& val = tape.value(hidden);
            hidden = tape.mask(hidden, dropout_mask(*dropout, val.rows(), val.cols(), rate));
        }
        z = tape.add(z1, tape.add_row(tape.matmul(hidden, bv.ff2_weight), bv.ff2_bias));
    }

    Heads heads;
    heads.mean = tape.add_row(tape.matmul(z, net.mean_weight), net.mean_bias);
    heads.quantile = tape.add_row(tape.matmul(z, net.quant_weight), net.quant_bias);
    return heads;
}

struct StandardizedOutput {
    TargetVec mean{};
    std::array<std::array<double, kQuantiles>, kTargets> quantiles{};
};

StandardizedOutput decode_heads(const Tape& tape, const Heads& heads) {
    StandardizedOutput out;
    const Matrix& mean = tape.value(heads.mean);
    const Matrix& raw = tape.value(heads.quantile);
    for (std::size_t c = 0; c < kTargets; ++c) {
        out.mean[c] = mean(0, static_cast<Eigen::Index>(c));
        const auto base = static_cast<Eigen::Index>(c * kQuantiles);
        const std::array<double, 3> up{raw(0, base + 1), raw(0, base + 2), raw(0, base + 3)};
        const std::array<double, 3> down{raw(0, base + 4), raw(0, base + 5), raw(0, base + 6)};
        out.quantiles[c] = decode_quantiles(raw(0, base), up, down);
    }
    return out;
}

struct WindowResult {
    double loss = 0.0;
    Matrix mean_seed;
    Matrix quantile_seed;
};

/// Loss of one window (summed over channels) and its adjoints with respect to
/// the two head outputs, each scaled by `scale`.
WindowResult window_loss(const ModelState& model, const Tape& tape, const Heads& heads, const Window& window,
                         double scale) {
    const double lambda = model.config.mean_loss_weight;
    const auto out = decode_heads(tape, heads);
    const Matrix& raw = tape.value(heads.quantile);

    WindowResult r;
    r.mean_seed = Matrix::Zero(1, static_cast<Eigen::Index>(kTargets));
    r.quantile_seed = Matrix::Zero(1, static_cast<Eigen::Index>(kQuantileHeadWidth));
    for (std::size_t c = 0; c < kTargets; ++c) {
        const double y = model.norm.standardize_target(c, window.label[c]);
        const auto& q = out.quantiles[c];
        std::array<double, kQuantiles> g{};
        for (std::size_t k = 0; k < kQuantiles; ++k) {
            r.loss += pinball_loss(y, q[k], kQuantileLevels[k]);
            g[k] = pinball_gradient(y, q[k], kQuantileLevels[k]);
        }
        const double err = out.mean[c] - y;
        r.loss += lambda * err * err;
        r.mean_seed(0, static_cast<Eigen::Index>(c)) = scale * 2.0 * lambda * err;

        const auto base = static_cast<Eigen::Index>(c * kQuantiles);
        double dmedian = 0.0;
        for (const double gk : g) {
            dmedian += gk;
        }
        // levels: 0 -> 0.01, 1 -> 0.10, 2 -> 0.25, 3 -> median, 4 -> 0.75, 5 -> 0.90, 6 -> 0.99
        const double up_tail[3] = {g[4] + g[5] + g[6], g[5] + g[6], g[6]};
        const double down_tail[3] = {g[2] + g[1] + g[0], g[1] + g[0], g[0]};
        r.quantile_seed(0, base) = scale * dmedian;
        for (int j = 0; j < 3; ++j) {
            r.quantile_seed(0, base + 1 + j) = scale * up_tail[j] * sigmoid(raw(0, base + 1 + j));
            r.quantile_seed(0, base + 4 + j) = -scale * down_tail[j] * sigmoid(raw(0, base + 4 + j));
        }
    }
    return r;
}

void accumulate_leaf_gradients(const Tape& tape, const Network& net, const std::vector<ParamBlock>& layout,
                               std::vector<double>& grad) {
    for (std::size_t i = 0; i < layout.size(); ++i) {
        const auto& block = layout[i];
        const Matrix& g = tape.grad(net.leaves[i]);
        double* dst = grad.data() + block.offset;
        for (std::size_t r = 0; r < block.rows; ++r) {
            for (std::size_t c = 0; c < block.cols; ++c) {
                dst[r * block.cols + c] += g(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
            }
        }
    }
}

struct ChunkResult {
    double loss = 0.0;
    std::vector<double> gradient;
};

ChunkResult chunk_loss_and_gradient(const ModelState& model, const std::vector<ParamBlock>& layout,
                                    std::span<const Window> batch, std::size_t begin, std::size_t end, double scale,
                                    std::optional<std::uint64_t> dropout_seed) {
    ChunkResult res;
    res.gradient.assign(model.params.size(), 0.0);
    for (std::size_t w = begin; w < end; ++w) {
        Tape tape;
        const Network net = load_network(tape, model.config, layout, model.params);
        std::optional<Rng> rng;
        if (dropout_seed && model.config.dropout > 0.0) {
            rng.emplace(Rng::derive(*dropout_seed, w));
        }
        const Heads heads = run_network(tape, net, model, batch[w], rng ? &*rng : nullptr);
        const WindowResult wr = window_loss(model, tape, heads, batch[w], scale);
        res.loss += wr.loss;
        // Both heads hang off the same graph; seed them through one joint output.
        const std::array<Var, 2> outs{heads.mean, heads.quantile};
        const Var joint = tape.concat_cols(outs);
        Matrix seed(1, static_cast<Eigen::Index>(kTargets + kQuantileHeadWidth));
        seed << wr.mean_seed, wr.quantile_seed;
        tape.backward(joint, seed);
        accumulate_leaf_gradients(tape, net, layout, res.gradient);
    }
    return res;
}

/// Pairwise reduction with a fixed shape so the sum does not depend on how
/// chunks were scheduled.
void tree_reduce(std::vector<ChunkResult>& chunks) {
    for (std::size_t stride = 1; stride < chunks.size(); stride *= 2) {
        for (std::size_t i = 0; i + stride < chunks.size(); i += 2 * stride) {
            chunks[i].loss += chunks[i + stride].loss;
            auto& dst = chunks[i].gradient;
            const auto& src = chunks[i + stride].gradient;
            for (std::size_t k = 0; k < dst.size(); ++k) {
                dst[k] += src[k];
            }
        }
    }
}

}  // namespace

void ModelConfig::validate() const {
    auto bad = [](const std::string& msg) { fail(ErrorKind::Config, "invalid model config: " + msg); };
    if (window_length < 2) {
        bad("window length must be at least 2");
    }
    if (hidden < 2) {
        bad("hidden width must be at least 2");
    }
    if (heads < 1 || hidden % heads != 0) {
        bad(fmt::format("attention heads ({}) must divide hidden width ({})", heads, hidden));
    }
    if (blocks < 1) {
        bad("at least one attention block is required");
    }
    if (hour_embedding < 1 || day_embedding < 1 || month_embedding < 1) {
        bad("embedding sizes must be positive");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) {
        bad("dropout must lie in [0, 1)");
    }
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        bad("learning rate must be positive");
    }
    if (batch_size < 1) {
        bad("batch size must be positive");
    }
    if (patience < 1) {
        bad("patience must be positive");
    }
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
        bad("validation fraction must lie in (0, 1)");
    }
    if (!(mean_loss_weight >= 0.0) || !std::isfinite(mean_loss_weight)) {
        bad("mean loss weight must be non-negative");
    }
}

std::size_t ModelConfig::feature_width() const {
    return kContinuous + hour_embedding + day_embedding + month_embedding;
}

std::vector<ParamBlock> param_layout(const ModelConfig& config) {
    config.validate();
    std::vector<ParamBlock> layout;
    std::size_t offset = 0;
    auto add = [&](std::string name, std::size_t rows, std::size_t cols) {
        layout.push_back(ParamBlock{std::move(name), rows, cols, offset});
        offset += rows * cols;
    };
    const std::size_t H = config.hidden;
    add("embedding.hour", kHours, config.hour_embedding);
    add("embedding.day", kDays, config.day_embedding);
    add("embedding.month", kMonths, config.month_embedding);
    add("input.weight", config.feature_width(), H);
    add("input.bias", 1, H);
    add("position", config.window_length, H);
    for (std::size_t b = 0; b < config.blocks; ++b) {
        const std::string p = fmt::format("block{}.", b);
        add(p + "query", H, H);
        add(p + "key", H, H);
        add(p + "value", H, H);
        add(p + "output.weight", H, H);
        add(p + "output.bias", 1, H);
        add(p + "ff1.weight", H, config.feed_forward_width());
        add(p + "ff1.bias", 1, config.feed_forward_width());
        add(p + "ff2.weight", config.feed_forward_width(), H);
        add(p + "ff2.bias", 1, H);
    }
    add("head.mean.weight", H, kTargets);
    add("head.mean.bias", 1, kTargets);
    add("head.quantile.weight", H, kQuantileHeadWidth);
    add("head.quantile.bias", 1, kQuantileHeadWidth);
    return layout;
}

std::size_t param_count(const ModelConfig& config) {
    const auto layout = param_layout(config);
    return layout.back().offset + layout.back().size();
}

std::optional<std::size_t> quantile_index(double level) {
    for (std::size_t k = 0; k < kQuantiles; ++k) {
        if (std::abs(kQuantileLevels[k] - level) < 1e-12) {
            return k;
        }
    }
    return std::nullopt;
}

ModelState init(const ModelConfig& config, std::uint64_t seed) {
    const auto layout = param_layout(config);
    ModelState model;
    model.config = config;
    model.norm.target_std.fill(1.0);
    model.norm.covariate_std.fill(1.0);
    model.params.assign(layout.back().offset + layout.back().size(), 0.0);
    Rng rng(Rng::derive(seed, 0));
    for (const auto& block : layout) {
        if (block.name.ends_with("bias")) {
            continue;
        }
        const double bound = 1.0 / std::sqrt(static_cast<double>(block.rows));
        for (std::size_t i = 0; i < block.size(); ++i) {
            model.params[block.offset + i] = rng.uniform(-bound, bound);
        }
    }
    return model;
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

std::array<double, kQuantiles> decode_quantiles(double median, std::span<const double, 3> up,
                                                std::span<const double, 3> down) {
    std::array<double, kQuantiles> q{};
    q[kMedianIndex] = median;
    double acc = median;
    for (std::size_t j = 0; j < 3; ++j) {
        acc += softplus(up[j]);
        q[kMedianIndex + 1 + j] = acc;
    }
    acc = median;
    for (std::size_t j = 0; j < 3; ++j) {
        acc -= softplus(down[j]);
        q[kMedianIndex - 1 - j] = acc;
    }
    return q;
}

double pinball_loss(double y, double qhat, double q) {
    const double e = y - qhat;
    return std::max(q * e, (q - 1.0) * e);
}

double pinball_gradient(double y, double qhat, double q) {
    // d/dqhat of max(q e, (q - 1) e) with e = y - qhat
    return y - qhat > 0.0 ? -q : 1.0 - q;
}

std::vector<double> continuous_features(const NormStats& norm, const MonitoringSample& s) {
    std::vector<double> f(kContinuous);
    for (std::size_t c = 0; c < kTargets; ++c) {
        f[c] = norm.standardize_target(c, s.targets[c]);
    }
    const auto cov = model_covariates(s);
    for (std::size_t c = 0; c < kModelCovariates; ++c) {
        f[kTargets + c] = norm.standardize_covariate(c, cov[c]);
    }
    return f;
}

ForecastDistribution forward(const ModelState& model, const Window& window) {
    check_window(model, window);
    const auto layout = param_layout(model.config);
    Tape tape(false);
    const Network net = load_network(tape, model.config, layout, model.params);
    const Heads heads = run_network(tape, net, model, window, nullptr);
    const auto out = decode_heads(tape, heads);

    ForecastDistribution dist;
    for (std::size_t c = 0; c < kTargets; ++c) {
        dist.channels[c].mean = model.norm.destandardize_target(c, out.mean[c]);
        for (std::size_t k = 0; k < kQuantiles; ++k) {
            dist.channels[c].quantiles[k] = model.norm.destandardize_target(c, out.quantiles[c][k]);
        }
    }
    return dist;
}

double batch_loss(const ModelState& model, std::span<const Window> batch) {
    if (batch.empty()) {
        fail(ErrorKind::Data, "batch_loss needs a non-empty batch");
    }
    const auto layout = param_layout(model.config);
    std::vector<ChunkResult> chunks;
    for (std::size_t begin = 0; begin < batch.size(); begin += kWindowsPerChunk) {
        const std::size_t end = std::min(batch.size(), begin + kWindowsPerChunk);
        ChunkResult cr;
        for (std::size_t w = begin; w < end; ++w) {
            check_window(model, batch[w]);
            Tape tape(false);
            const Network net = load_network(tape, model.config, layout, model.params);
            const Heads heads = run_network(tape, net, model, batch[w], nullptr);
            cr.loss += window_loss(model, tape, heads, batch[w], 1.0).loss;
        }
        chunks.push_back(std::move(cr));
    }
    tree_reduce(chunks);
    return chunks.front().loss / static_cast<double>(batch.size() * kTargets);
}

LossAndGradient loss_and_gradient(const ModelState& model, std::span<const Window> batch,
                                  std::optional<std::uint64_t> dropout_seed, const ComputeOptions& options) {
    if (batch.empty()) {
        fail(ErrorKind::Data, "gradients need a non-empty batch");
    }
    for (const auto& w : batch) {
        check_window(model, w);
    }
    const auto layout = param_layout(model.config);
    const double scale = 1.0 / static_cast<double>(batch.size() * kTargets);
    const std::size_t n_chunks = (batch.size() + kWindowsPerChunk - 1) / kWindowsPerChunk;
    std::vector<ChunkResult> chunks(n_chunks);

    detail::parallel_for(options.threads, n_chunks, [&](std::size_t c) {
        const std::size_t begin = c * kWindowsPerChunk;
        const std::size_t end = std::min(batch.size(), begin + kWindowsPerChunk);
        chunks[c] = chunk_loss_and_gradient(model, layout, batch, begin, end, scale, dropout_seed);
    });
    tree_reduce(chunks);

    LossAndGradient out;
    out.loss = chunks.front().loss * scale;
    out.gradient = std::move(chunks.front().gradient);
    for (std::size_t i = 0; i < out.gradient.size(); ++i) {
        if (!std::isfinite(out.gradient[i])) {
            std::string where;
            for (const auto& block : layout) {
                if (i >= block.offset && i < block.offset + block.size()) {
                    where = block.name;
                }
            }
            fail(ErrorKind::Numeric, fmt::format("non-finite gradient at parameter index {} ({})", i, where));
        }
    }
    return out;
}

std::vector<double> gradients(const ModelState& model, std::span<const Window> batch) {
    return loss_and_gradient(model, batch).gradient;
}

}  // namespace fqs
