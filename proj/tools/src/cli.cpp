#include "fqs_cli/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>
#include <ostream>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "fqs/anomaly.hpp"
#include "fqs/error.hpp"
#include "fqs/forecaster.hpp"
#include "fqs/model_io.hpp"
#include "fqs/report.hpp"
#include "fqs/series.hpp"
#include "fqs/synthbench.hpp"
#include "fqs_cli/files.hpp"

namespace fqs::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kReportFile = "anomaly_report.csv";
constexpr const char* kModelFile = "model.fqs";
constexpr const char* kConfigEcho = "effective_config.json";

struct CommonOptions {
    std::optional<std::uint64_t> seed;
    std::string config_path;
    std::string out_dir;
    std::string from;
    std::string to;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--seed", o.seed, "Random seed");
    cmd->add_option("--config", o.config_path, "JSON configuration file");
    cmd->add_option("--out", o.out_dir, "Output directory")->required();
    cmd->add_option("--from", o.from, "Range start (ISO-8601, inclusive)");
    cmd->add_option("--to", o.to, "Range end (ISO-8601, exclusive)");
    cmd->add_flag("--quiet", o.quiet, "Suppress progress output");
}

TimeRange resolve_range(const CommonOptions& o, const Series& series) {
    TimeRange r{HourStamp{std::numeric_limits<std::int64_t>::min()}, HourStamp{std::numeric_limits<std::int64_t>::max()}};
    if (!series.empty()) {
        r = TimeRange{series.first(), series.last() + 1};
    }
    try {
        if (!o.from.empty()) {
            r.from = parse_timestamp(o.from, true);
        }
        if (!o.to.empty()) {
            r.to = parse_timestamp(o.to, true);
        }
    } catch (const Error& e) {
        fail(ErrorKind::Usage, fmt::format("bad date range: {}", e.what()));
    }
    if (!(r.from < r.to)) {
        fail(ErrorKind::Usage, "date range is empty (--from must precede --to)");
    }
    return r;
}

json read_config_object(const std::string& path) {
    if (path.empty()) {
        return json::object();
    }
    const std::string text = read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::Config, fmt::format("config file '{}' is not valid JSON: {}", path, e.what()));
    }
    if (!j.is_object()) {
        fail(ErrorKind::Config, fmt::format("config file '{}' must hold a JSON object", path));
    }
    return j;
}

template <typename T>
T take(json& j, const char* key, T fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    try {
        T v = j.at(key).get<T>();
        j.erase(key);
        return v;
    } catch (const json::exception& e) {
        fail(ErrorKind::Config, fmt::format("config key '{}': {}", key, e.what()));
    }
}

std::string_view gap_policy_name(GapPolicy::Kind k) {
    switch (k) {
        case GapPolicy::Kind::LinearInterpolate:
            return "linear";
        case GapPolicy::Kind::CarryForward:
            return "carry-forward";
        case GapPolicy::Kind::DropWindow:
            return "drop-window";
    }
    return "linear";
}

Series load_series(const std::string& path, const GapPolicy& policy) {
    const Series raw = parse_csv(read_file(path));
    if (raw.size() < 2) {
        fail(ErrorKind::Data, fmt::format("'{}' holds fewer than 2 samples", path));
    }
    return fill_gaps(raw, policy);
}

// --- synth -----------------------------------------------------------------------

struct SynthOptions {
    CommonOptions common;
    std::string scenario_path;
};

int cmd_synth(const SynthOptions& o, std::ostream& out) {
    std::string path = o.scenario_path.empty() ? o.common.config_path : o.scenario_path;
    Scenario scenario = path.empty() ? Scenario{} : scenario_from_json(read_file(path));
    if (path.empty()) {
        scenario.start = parse_timestamp("2015-10-28T00:00:00Z");
    }
    if (o.common.seed) {
        scenario.seed = *o.common.seed;
    }
    const Generated gen = generate(scenario);
    const fs::path dir(o.common.out_dir);
    write_files_atomic({{dir / "data.csv", write_csv(gen.series)},
                        {dir / "labels.csv", write_labels_csv(gen.labels)},
                        {dir / kConfigEcho, scenario_to_json(scenario)}});
    if (!o.common.quiet) {
        const auto anomalous = std::count_if(gen.labels.begin(), gen.labels.end(), [](const Label& l) { return l.anomalous; });
        out << fmt::format("wrote {} hourly samples ({} labeled anomalous) to {}\n", gen.series.size(), anomalous,
                           dir.string());
    }
    return kExitOk;
}

// --- train ---------------------------------------------------------------------------

struct TrainCliOptions {
    CommonOptions common;
    std::string data_path;
    std::optional<std::size_t> window, hidden, heads, blocks, epochs, batch, patience, threads;
    std::optional<double> lr, dropout, validation_fraction;
    std::optional<std::string> gap_policy;
    std::optional<int> max_gap;
};

int cmd_train(const TrainCliOptions& o, std::ostream& out) {
    json file = read_config_object(o.common.config_path);
    GapPolicy policy;
    policy.kind = parse_gap_policy(take<std::string>(file, "gap_policy", "linear"));
    policy.max_gap_hours = take<int>(file, "max_gap_hours", policy.max_gap_hours);
    std::size_t threads = take<std::size_t>(file, "threads", 1);
    ModelConfig config = model_config_from_json(file.dump());
    if (o.gap_policy) {
        policy.kind = parse_gap_policy(*o.gap_policy);
    }
    if (o.max_gap) {
        policy.max_gap_hours = *o.max_gap;
    }
    if (o.threads) {
        threads = *o.threads;
    }
    if (o.common.seed) {
        config.seed = *o.common.seed;
    }
    if (o.window) config.window_length = *o.window;
    if (o.hidden) config.hidden = *o.hidden;
    if (o.heads) config.heads = *o.heads;
    if (o.blocks) config.blocks = *o.blocks;
    if (o.epochs) config.max_epochs = *o.epochs;
    if (o.batch) config.batch_size = *o.batch;
    if (o.patience) config.patience = *o.patience;
    if (o.lr) config.learning_rate = *o.lr;
    if (o.dropout) config.dropout = *o.dropout;
    if (o.validation_fraction) config.validation_fraction = *o.validation_fraction;
    config.validate();

    const Series full = load_series(o.data_path, policy);
    const TimeRange range = resolve_range(o.common, full);
    const Series series = slice(full, range.from, range.to);

    TrainOptions topts;
    topts.threads = threads;
    if (!o.common.quiet) {
        topts.on_epoch = [&](const EpochLog& e) {
            out << fmt::format("epoch {:3d}  train {:.6f}  validation {:.6f}\n", e.epoch, e.train_loss,
                               e.validation_loss);
        };
    }
    const ModelState model = train(series, config, topts);

    double final_val = std::numeric_limits<double>::quiet_NaN();
    for (const auto& e : model.log) {
        if (e.epoch == model.best_epoch) {
            final_val = e.validation_loss;
        }
    }
    if (model.log.empty()) {
        const auto windows = build_windows(series, config.window_length);
        const auto n_val = static_cast<std::size_t>(
            std::ceil(config.validation_fraction * static_cast<double>(windows.size())));
        final_val = batch_loss(model, std::span<const Window>(windows).subspan(windows.size() - n_val));
    }

    std::string log_csv = "epoch,train_loss,validation_loss\n";
    for (const auto& e : model.log) {
        log_csv += fmt::format("{},{},{}\n", e.epoch, e.train_loss, e.validation_loss);
    }
    json echo = json::parse(model_config_to_json(config));
    echo["command"] = "train";
    echo["data"] = o.data_path;
    echo["gap_policy"] = gap_policy_name(policy.kind);
    echo["max_gap_hours"] = policy.max_gap_hours;
    echo["range"] = {format_timestamp(range.from), format_timestamp(range.to)};
    const fs::path dir(o.common.out_dir);
    write_files_atomic({{dir / kModelFile, save_model(model)},
                        {dir / "training_log.csv", log_csv},
                        {dir / kConfigEcho, echo.dump(2) + "\n"}});
    if (!o.common.quiet) {
        out << fmt::format("best epoch {} of {}\n", model.best_epoch, model.log.size());
    }
    out << fmt::format("final validation loss {:.6f}\n", final_val);
    return kExitOk;
}

// --- detect -------------------------------------------------------------------------

struct DetectOptions {
    CommonOptions common;
    std::string model_path;
    std::string data_path;
    std::optional<int> percentile;
    std::optional<std::string> weights;
    std::optional<std::string> gap_policy;
    std::optional<int> max_gap;
    std::optional<std::size_t> threads;
    bool svg = false;
};

int cmd_detect(const DetectOptions& o, std::ostream& out, std::ostream& err) {
    json file = read_config_object(o.common.config_path);
    GapPolicy policy;
    policy.kind = parse_gap_policy(take<std::string>(file, "gap_policy", "linear"));
    policy.max_gap_hours = take<int>(file, "max_gap_hours", policy.max_gap_hours);
    DetectorConfig dc;
    dc.percentile = take<int>(file, "percentile", dc.percentile);
    dc.weights = parse_weight_mode(take<std::string>(file, "weights", std::string(weight_mode_name(dc.weights))));
    std::size_t threads = take<std::size_t>(file, "threads", 1);
    for (const auto& [key, value] : file.items()) {
        fail(ErrorKind::Config, fmt::format("unknown detect config key '{}'", key));
    }
    if (o.percentile) dc.percentile = *o.percentile;
    if (o.weights) dc.weights = parse_weight_mode(*o.weights);
    if (o.gap_policy) policy.kind = parse_gap_policy(*o.gap_policy);
    if (o.max_gap) policy.max_gap_hours = *o.max_gap;
    if (o.threads) threads = *o.threads;

    const ModelState model = load_model(read_file(o.model_path));
    dc.window_length = model.config.window_length;
    dc.validate();

    const Series series = load_series(o.data_path, policy);
    const TimeRange range = resolve_range(o.common, series);
    if (model.training_range && model.training_range->overlaps(range)) {
        err << fmt::format("warning: detection range [{}, {}) overlaps the training range [{}, {})\n",
                           format_timestamp(range.from), format_timestamp(range.to),
                           format_timestamp(model.training_range->from), format_timestamp(model.training_range->to));
    }
    const auto all = run_sliding(model, series, dc, threads);
    std::vector<AnomalyRecord> records;
    for (const auto& r : all) {
        if (range.contains(r.timestamp)) {
            records.push_back(r);
        }
    }

    const fs::path dir(o.common.out_dir);
    std::vector<std::pair<fs::path, std::string>> files;
    files.emplace_back(dir / kReportFile, write_report_csv(records));
    std::vector<std::vector<PlotRow>> plots;
    for (std::size_t c = 0; c < kTargets; ++c) {
        std::string csv = write_plot_csv(records, c);
        plots.push_back(parse_plot_csv(csv));
        files.emplace_back(dir / fmt::format("plot_f{}.csv", c + 1), std::move(csv));
    }
    if (o.svg) {
        files.emplace_back(dir / "anomalies.svg", render_svg(records, plots));
    }
    json echo;
    echo["command"] = "detect";
    echo["model"] = o.model_path;
    echo["data"] = o.data_path;
    echo["percentile"] = dc.percentile;
    echo["window_length"] = dc.window_length;
    echo["weights"] = weight_mode_name(dc.weights);
    echo["gap_policy"] = gap_policy_name(policy.kind);
    echo["max_gap_hours"] = policy.max_gap_hours;
    echo["range"] = {format_timestamp(range.from), format_timestamp(range.to)};
    files.emplace_back(dir / kConfigEcho, echo.dump(2) + "\n");
    write_files_atomic(files);

    if (!o.common.quiet) {
        const auto scored = std::count_if(records.begin(), records.end(), [](const auto& r) { return r.scored; });
        const auto flagged = std::count_if(records.begin(), records.end(), [](const auto& r) { return r.anomalous; });
        out << fmt::format("{} rows ({} scored, {} unscored), {} anomalous; report in {}\n", records.size(), scored,
                           records.size() - static_cast<std::size_t>(scored), flagged, dir.string());
    }
    return kExitOk;
}

// --- eval -------------------------------------------------------------------------------

struct EvalOptions {
    CommonOptions common;
    std::string report_path;
    std::string labels_path;
    int tolerance = 2;
    double threshold = 0.0;
    bool sweep = false;
    std::vector<double> sweep_thresholds;
};

int cmd_eval(const EvalOptions& o, std::ostream& out) {
    fs::path report_path(o.report_path);
    if (fs::is_directory(report_path)) {
        report_path /= kReportFile;
    }
    const auto records = parse_report_csv(read_file(report_path));
    const auto labels = parse_labels_csv(read_file(o.labels_path));
    const EvalReport report = evaluate(records, labels, o.tolerance, o.threshold);

    json j = json::parse(eval_report_to_json(report));
    if (o.sweep || !o.sweep_thresholds.empty()) {
        std::vector<double> thresholds = o.sweep_thresholds;
        if (thresholds.empty()) {
            double max_score = 0.0;
            for (const auto& r : records) {
                if (r.scored) {
                    max_score = std::max(max_score, r.score);
                }
            }
            constexpr int kSteps = 20;
            for (int i = 0; i <= kSteps; ++i) {
                thresholds.push_back(max_score * i / kSteps);
            }
        }
        std::sort(thresholds.begin(), thresholds.end());
        thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
        json sweep = json::array();
        for (const double t : thresholds) {
            const auto r = evaluate(records, labels, o.tolerance, t);
            sweep.push_back({{"threshold", t},
                             {"precision", r.precision},
                             {"recall", r.recall},
                             {"f1", r.f1},
                             {"false_positive_rate", r.false_positive_rate}});
        }
        j["sweep"] = sweep;
    }
    json echo;
    echo["command"] = "eval";
    echo["report"] = report_path.string();
    echo["labels"] = o.labels_path;
    echo["tolerance_hours"] = o.tolerance;
    echo["threshold"] = o.threshold;
    const fs::path dir(o.common.out_dir);
    write_files_atomic({{dir / "metrics.json", j.dump(2) + "\n"}, {dir / kConfigEcho, echo.dump(2) + "\n"}});

    out << fmt::format("events {}  hits {}  recall {:.4f}  precision {:.4f}  F1 {:.4f}  FPR {:.4f}\n", report.events,
                       report.hits, report.recall, report.precision, report.f1, report.false_positive_rate);
    if (report.zero_flags) {
        out << "note: no detections; precision reported as 1 by convention\n";
    }
    if (!o.common.quiet) {
        for (const auto& e : report.per_event) {
            out << fmt::format("  {:<24} {} .. {}  {}\n", e.id, format_timestamp(e.span.from),
                               format_timestamp(e.span.to), e.hit ? "hit" : "MISS");
        }
    }
    return kExitOk;
}

// --- report -------------------------------------------------------------------------------

struct ReportOptions {
    CommonOptions common;
    std::string input_dir;
    std::size_t top = 10;
};

int cmd_report(const ReportOptions& o, std::ostream& out) {
    const fs::path in(o.input_dir);
    const auto records = parse_report_csv(read_file(in / kReportFile));
    std::vector<std::vector<PlotRow>> plots;
    for (std::size_t c = 0; c < kTargets; ++c) {
        plots.push_back(parse_plot_csv(read_file(in / fmt::format("plot_f{}.csv", c + 1))));
    }
    // Observations are not part of the report file; restore them from the plot data.
    std::vector<AnomalyRecord> enriched = records;
    for (std::size_t c = 0; c < kTargets; ++c) {
        std::size_t k = 0;
        for (auto& r : enriched) {
            while (k < plots[c].size() && plots[c][k].timestamp < r.timestamp) {
                ++k;
            }
            if (k < plots[c].size() && plots[c][k].timestamp == r.timestamp) {
                r.channels[c].observed = plots[c][k].observed;
            }
        }
    }

    std::vector<const AnomalyRecord*> ranked;
    for (const auto& r : enriched) {
        if (r.scored && r.anomalous) {
            ranked.push_back(&r);
        }
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto* a, const auto* b) { return a->score > b->score; });
    std::string summary = "timestamp,score,violated_channels\n";
    for (std::size_t i = 0; i < std::min(o.top, ranked.size()); ++i) {
        std::string channels;
        for (const auto& v : ranked[i]->channels) {
            if (v.violated) {
                channels += (channels.empty() ? "" : " ") + fmt::format("f{}", v.channel + 1);
            }
        }
        summary += fmt::format("{},{},{}\n", format_timestamp(ranked[i]->timestamp), ranked[i]->score, channels);
    }
    const fs::path dir(o.common.out_dir);
    json echo;
    echo["command"] = "report";
    echo["input"] = o.input_dir;
    echo["top"] = o.top;
    write_files_atomic({{dir / "anomalies.svg", render_svg(enriched, plots)},
                        {dir / "top_anomalies.csv", summary},
                        {dir / kConfigEcho, echo.dump(2) + "\n"}});
    if (!o.common.quiet) {
        out << summary;
    }
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Quantile-forecast anomaly detection for structural natural frequencies", "fqs"};
    app.require_subcommand(1);

    SynthOptions synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a labeled synthetic monitoring dataset");
    add_common(synth_cmd, synth.common);
    synth_cmd->add_option("--scenario", synth.scenario_path, "Scenario JSON file (defaults built in)");

    TrainCliOptions tr;
    auto* train_cmd = app.add_subcommand("train", "Train the quantile forecaster");
    add_common(train_cmd, tr.common);
    train_cmd->add_option("--data", tr.data_path, "Canonical CSV input")->required();
    train_cmd->add_option("--window", tr.window, "Window length T in hours");
    train_cmd->add_option("--hidden", tr.hidden, "Hidden width");
    train_cmd->add_option("--heads", tr.heads, "Attention heads");
    train_cmd->add_option("--blocks", tr.blocks, "Attention blocks");
    train_cmd->add_option("--epochs", tr.epochs, "Maximum epochs");
    train_cmd->add_option("--batch", tr.batch, "Batch size");
    train_cmd->add_option("--patience", tr.patience, "Early-stopping patience");
    train_cmd->add_option("--lr", tr.lr, "Learning rate");
    train_cmd->add_option("--dropout", tr.dropout, "Dropout rate");
    train_cmd->add_option("--validation-fraction", tr.validation_fraction, "Chronological validation share");
    train_cmd->add_option("--gap-policy", tr.gap_policy, "linear | carry-forward | drop-window");
    train_cmd->add_option("--max-gap", tr.max_gap, "Longest gap to fill, hours");
    train_cmd->add_option("--threads", tr.threads, "Worker threads (results do not depend on it)");

    DetectOptions det;
    auto* detect_cmd = app.add_subcommand("detect", "Run sliding-window anomaly detection");
    add_common(detect_cmd, det.common);
    detect_cmd->add_option("--model", det.model_path, "Model file")->required();
    detect_cmd->add_option("--data", det.data_path, "Canonical CSV input")->required();
    detect_cmd->add_option("--percentile", det.percentile, "Band percentile p (75, 90 or 99)");
    detect_cmd->add_option("--weights", det.weights, "inverse-mean-frequency | uniform");
    detect_cmd->add_option("--gap-policy", det.gap_policy, "linear | carry-forward | drop-window");
    detect_cmd->add_option("--max-gap", det.max_gap, "Longest gap to fill, hours");
    detect_cmd->add_option("--threads", det.threads, "Worker threads (results do not depend on it)");
    detect_cmd->add_flag("--svg", det.svg, "Also render anomalies.svg");

    EvalOptions ev;
    auto* eval_cmd = app.add_subcommand("eval", "Score a detection report against ground-truth labels");
    add_common(eval_cmd, ev.common);
    eval_cmd->add_option("--report", ev.report_path, "Anomaly report CSV or detect output directory")->required();
    eval_cmd->add_option("--labels", ev.labels_path, "Labels CSV")->required();
    eval_cmd->add_option("--tolerance", ev.tolerance, "Match tolerance in hours")->check(CLI::NonNegativeNumber);
    eval_cmd->add_option("--threshold", ev.threshold, "Minimum score of a detection");
    eval_cmd->add_flag("--sweep", ev.sweep, "Add a threshold sweep to metrics.json");
    eval_cmd->add_option("--sweep-thresholds", ev.sweep_thresholds, "Explicit sweep thresholds");

    ReportOptions rep;
    auto* report_cmd = app.add_subcommand("report", "Render SVG and top-anomaly summary from detect output");
    add_common(report_cmd, rep.common);
    report_cmd->add_option("--in", rep.input_dir, "detect output directory")->required();
    report_cmd->add_option("--top", rep.top, "Number of top-scoring timesteps to list");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (synth_cmd->parsed()) {
            return cmd_synth(synth, out);
        }
        if (train_cmd->parsed()) {
            return cmd_train(tr, out);
        }
        if (detect_cmd->parsed()) {
            return cmd_detect(det, out, err);
        }
        if (eval_cmd->parsed()) {
            return cmd_eval(ev, out);
        }
        if (report_cmd->parsed()) {
            return cmd_report(rep, out);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.kind() == ErrorKind::Usage || e.kind() == ErrorKind::Config ? kExitUsage : kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace fqs::cli
