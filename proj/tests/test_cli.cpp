#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "fqs/model_io.hpp"
#include "fqs_cli/cli.hpp"
#include "fqs_cli/files.hpp"

namespace fs = std::filesystem;
using fqs::cli::run;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result fqs_run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() / ("fqs_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

void write(const std::string& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

const char* kScenario = R"({
  "start": "2016-01-01",
  "duration_hours": 700,
  "seed": 5,
  "events": [
    {"id": "quake", "kind": "multi-channel-transient", "start": "2016-01-27T10:00:00Z",
     "duration_hours": 4, "magnitude": 6, "channels": [1, 2, 3, 4, 5]}
  ]
})";

std::vector<std::string> train_args(const TempDir& d, const std::string& out) {
    return {"train", "--data", d / "synth/data.csv", "--out", out, "--window", "8", "--hidden", "4", "--heads", "1",
            "--epochs", "2", "--seed", "3", "--to", "2016-01-21", "--quiet"};
}

}  // namespace

TEST_CASE("cli usage errors") {
    CHECK(fqs_run({}).code == fqs::cli::kExitUsage);
    CHECK(fqs_run({"frobnicate"}).code == fqs::cli::kExitUsage);
    CHECK(fqs_run({"train", "--out", "x"}).code == fqs::cli::kExitUsage);
    CHECK(fqs_run({"--help"}).code == fqs::cli::kExitOk);
}

TEST_CASE("cli synth") {
    TempDir d;
    SUBCASE("valid scenario") {
        write(d / "s.json", kScenario);
        const auto r = fqs_run({"synth", "--scenario", d / "s.json", "--out", d / "o"});
        CHECK(r.code == 0);
        CHECK(fs::exists(d / "o/data.csv"));
        CHECK(fs::exists(d / "o/labels.csv"));
        CHECK(fs::exists(d / "o/effective_config.json"));
    }
    SUBCASE("missing scenario file") {
        const auto r = fqs_run({"synth", "--scenario", d / "absent.json", "--out", d / "o"});
        CHECK(r.code == 2);
        CHECK_FALSE(fs::exists(d / "o/data.csv"));
    }
    SUBCASE("overlapping events") {
        write(d / "s.json", R"({"start":"2015-10-28","events":[
            {"id":"a","kind":"spike","start":"2015-11-01","channels":[2]},
            {"id":"b","kind":"step-shift","start":"2015-11-01","duration_hours":5,"channels":[2,3]}]})");
        const auto r = fqs_run({"synth", "--scenario", d / "s.json", "--out", d / "o"});
        CHECK(r.code == 2);
        CHECK(r.err.find("'a'") != std::string::npos);
        CHECK(r.err.find("'b'") != std::string::npos);
        CHECK_FALSE(fs::exists(d / "o"));
    }
}

TEST_CASE("cli pipeline") {
    TempDir d;
    write(d / "s.json", kScenario);
    REQUIRE(fqs_run({"synth", "--scenario", d / "s.json", "--out", d / "synth", "--quiet"}).code == 0);

    const auto tr = fqs_run(train_args(d, d / "model"));
    REQUIRE(tr.code == 0);
    CHECK(tr.out.find("final validation loss") != std::string::npos);
    const auto model = fqs::load_model(fqs::cli::read_file(d / "model/model.fqs"));
    CHECK(model.config.window_length == 8);

    SUBCASE("training is byte-reproducible") {
        REQUIRE(fqs_run(train_args(d, d / "model2")).code == 0);
        CHECK(fqs::cli::read_file(d / "model/model.fqs") == fqs::cli::read_file(d / "model2/model.fqs"));
    }
    SUBCASE("config file layered under flags") {
        write(d / "m.json", R"({"hidden": 8, "learning_rate": 0.01, "gap_policy": "carry-forward"})");
        auto args = train_args(d, d / "model3");
        args.insert(args.end(), {"--config", d / "m.json"});
        REQUIRE(fqs_run(args).code == 0);
        const auto echo = nlohmann::json::parse(fqs::cli::read_file(d / "model3/effective_config.json"));
        CHECK(echo["hidden"] == 4);
        CHECK(echo["learning_rate"] == 0.01);
        CHECK(echo["gap_policy"] == "carry-forward");
    }
    SUBCASE("range without data") {
        auto args = train_args(d, d / "none");
        args.insert(args.end(), {"--from", "2016-01-20T23:00:00Z"});
        CHECK(fqs_run(args).code == 1);
        CHECK_FALSE(fs::exists(d / "none"));
    }
    SUBCASE("detect and eval") {
        const auto det = fqs_run({"detect", "--model", d / "model/model.fqs", "--data", d / "synth/data.csv", "--from",
                                  "2016-01-22", "--out", d / "det", "--svg"});
        REQUIRE(det.code == 0);
        CHECK(det.err.empty());
        for (const auto* f : {"anomaly_report.csv", "plot_f1.csv", "plot_f5.csv", "anomalies.svg", "effective_config.json"}) {
            CHECK(fs::exists(d / (std::string("det/") + f)));
        }

        const auto ev = fqs_run({"eval", "--report", d / "det", "--labels", d / "synth/labels.csv", "--out", d / "ev",
                                 "--sweep"});
        REQUIRE(ev.code == 0);
        CHECK(ev.out.find("recall") != std::string::npos);
        const auto metrics = nlohmann::json::parse(fqs::cli::read_file(d / "ev/metrics.json"));
        double previous = 2.0;
        for (const auto& row : metrics["sweep"]) {
            CHECK(row["recall"].get<double>() <= previous);
            previous = row["recall"].get<double>();
        }
        CHECK(metrics["events"] == 1);

        const auto rep = fqs_run({"report", "--in", d / "det", "--out", d / "rep", "--quiet"});
        CHECK(rep.code == 0);
        CHECK(fs::exists(d / "rep/anomalies.svg"));
    }
    SUBCASE("detect warns on training overlap") {
        const auto det = fqs_run({"detect", "--model", d / "model/model.fqs", "--data", d / "synth/data.csv", "--out",
                                  d / "det", "--quiet"});
        CHECK(det.code == 0);
        CHECK(det.err.find("overlaps the training range") != std::string::npos);
    }
    SUBCASE("detect with a long gap leaves rows unscored") {
        auto text = fqs::cli::read_file(d / "synth/data.csv");
        std::istringstream in(text);
        std::string line, kept;
        int row = 0;
        while (std::getline(in, line)) {
            if (row < 560 || row > 600) {
                kept += line + "\n";
            }
            ++row;
        }
        write(d / "gappy.csv", kept);
        REQUIRE(fqs_run({"detect", "--model", d / "model/model.fqs", "--data", d / "gappy.csv", "--from", "2016-01-22",
                         "--out", d / "det", "--quiet"})
                    .code == 0);
        const auto report = fqs::cli::read_file(d / "det/anomaly_report.csv");
        CHECK(report.find(",0\n") != std::string::npos);
    }
    SUBCASE("empty report evaluates to zero recall") {
        const auto det = fqs_run({"detect", "--model", d / "model/model.fqs", "--data", d / "synth/data.csv", "--from",
                                  "2016-01-22", "--out", d / "det", "--quiet", "--percentile", "99"});
        REQUIRE(det.code == 0);
        const auto text = fqs::cli::read_file(d / "det/anomaly_report.csv");
        write(d / "header_only.csv", text.substr(0, text.find('\n') + 1));
        const auto ev = fqs_run({"eval", "--report", d / "header_only.csv", "--labels", d / "synth/labels.csv",
                                 "--out", d / "ev"});
        CHECK(ev.code == 0);
        CHECK(ev.out.find("recall 0.0000") != std::string::npos);
        CHECK(ev.out.find("no detections") != std::string::npos);
    }
    SUBCASE("corrupt model") {
        write(d / "bad.fqs", "FQS1garbage");
        const auto det = fqs_run({"detect", "--model", d / "bad.fqs", "--data", d / "synth/data.csv", "--out", d / "det"});
        CHECK(det.code == 1);
        CHECK_FALSE(fs::exists(d / "det"));
    }
}

TEST_CASE("atomic writes leave no partial output") {
    TempDir d;
    fs::create_directories(d / "blocked");
    write(d / "blocked/file", "x");
    CHECK_THROWS(fqs::cli::write_files_atomic({{d.path / "a.txt", "hello"}, {d.path / "blocked/file/b.txt", "no"}}));
    CHECK_FALSE(fs::exists(d / "a.txt"));
    for (const auto& e : fs::directory_iterator(d.path)) {
        CHECK(e.path().filename().string().find(".tmp") == std::string::npos);
    }
}
