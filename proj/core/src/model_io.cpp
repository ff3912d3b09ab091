#include "fqs/model_io.hpp"

#include <bit>
#include <cstring>

#include <fmt/format.h>
#include <json.hpp>

#include "fqs/error.hpp"

namespace fqs {

namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "model container assumes a little-endian host");

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

template <typename T>
void put(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    template <typename T>
    T get(const char* what) {
        need(sizeof(T), what);
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    std::string_view take(std::size_t n, const char* what) {
        need(n, what);
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t pos() const { return pos_; }

private:
    void need(std::size_t n, const char* what) {
        if (bytes_.size() - pos_ < n) {
            fail(ErrorKind::Format, fmt::format("corrupt model stream: truncated while reading {}", what));
        }
    }

    std::string_view bytes_;
    std::size_t pos_ = 0;
};

json config_json(const ModelConfig& c) {
    return json{{"window_length", c.window_length},
                {"hidden", c.hidden},
                {"heads", c.heads},
                {"blocks", c.blocks},
                {"hour_embedding", c.hour_embedding},
                {"day_embedding", c.day_embedding},
                {"month_embedding", c.month_embedding},
                {"dropout", c.dropout},
                {"learning_rate", c.learning_rate},
                {"batch_size", c.batch_size},
                {"max_epochs", c.max_epochs},
                {"patience", c.patience},
                {"validation_fraction", c.validation_fraction},
                {"mean_loss_weight", c.mean_loss_weight},
                {"seed", c.seed}};
}

ModelConfig apply_config_json(const json& j, ModelConfig c) {
    if (!j.is_object()) {
        fail(ErrorKind::Config, "model config must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "window_length") {
                c.window_length = value.get<std::size_t>();
            } else if (key == "hidden") {
                c.hidden = value.get<std::size_t>();
            } else if (key == "heads") {
                c.heads = value.get<std::size_t>();
            } else if (key == "blocks") {
                c.blocks = value.get<std::size_t>();
            } else if (key == "hour_embedding") {
                c.hour_embedding = value.get<std::size_t>();
            } else if (key == "day_embedding") {
                c.day_embedding = value.get<std::size_t>();
            } else if (key == "month_embedding") {
                c.month_embedding = value.get<std::size_t>();
            } else if (key == "dropout") {
                c.dropout = value.get<double>();
            } else if (key == "learning_rate") {
                c.learning_rate = value.get<double>();
            } else if (key == "batch_size") {
                c.batch_size = value.get<std::size_t>();
            } else if (key == "max_epochs") {
                c.max_epochs = value.get<std::size_t>();
            } else if (key == "patience") {
                c.patience = value.get<std::size_t>();
            } else if (key == "validation_fraction") {
                c.validation_fraction = value.get<double>();
            } else if (key == "mean_loss_weight") {
                c.mean_loss_weight = value.get<double>();
            } else if (key == "seed") {
                c.seed = value.get<std::uint64_t>();
            } else {
                fail(ErrorKind::Config, fmt::format("unknown model config key '{}'", key));
            }
        } catch (const json::exception& e) {
            fail(ErrorKind::Config, fmt::format("model config key '{}': {}", key, e.what()));
        }
    }
    return c;
}

template <std::size_t N>
json array_json(const std::array<double, N>& a) {
    return json(std::vector<double>(a.begin(), a.end()));
}

template <std::size_t N>
std::array<double, N> array_from(const json& j) {
    const auto v = j.get<std::vector<double>>();
    if (v.size() != N) {
        fail(ErrorKind::Format, "corrupt model stream: statistics have the wrong length");
    }
    std::array<double, N> a{};
    std::copy(v.begin(), v.end(), a.begin());
    return a;
}

}  // namespace

std::string model_config_to_json(const ModelConfig& config) { return config_json(config).dump(2); }

ModelConfig model_config_from_json(std::string_view text, ModelConfig base) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::Config, fmt::format("model config is not valid JSON: {}", e.what()));
    }
    return apply_config_json(j, base);
}

std::string save_model(const ModelState& model) {
    json header;
    header["config"] = config_json(model.config);
    header["norm"] = {{"target_mean", array_json(model.norm.target_mean)},
                      {"target_std", array_json(model.norm.target_std)},
                      {"covariate_mean", array_json(model.norm.covariate_mean)},
                      {"covariate_std", array_json(model.norm.covariate_std)}};
    json layout = json::array();
    for (const auto& block : param_layout(model.config)) {
        layout.push_back({{"name", block.name}, {"rows", block.rows}, {"cols", block.cols}});
    }
    header["layout"] = layout;
    header["quantile_levels"] = std::vector<double>(kQuantileLevels.begin(), kQuantileLevels.end());
    json channels = json::array();
    for (std::size_t c = 0; c < kFields; ++c) {
        channels.push_back(std::string(channel_info()[c].name));
    }
    header["channels"] = channels;
    json log = json::array();
    for (const auto& e : model.log) {
        log.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"validation_loss", e.validation_loss}});
    }
    header["log"] = log;
    header["best_epoch"] = model.best_epoch;
    if (model.training_range) {
        header["training_range"] = {model.training_range->from.hours, model.training_range->to.hours};
    } else {
        header["training_range"] = nullptr;
    }

    const std::string text = header.dump();
    std::string out;
    out.append(kModelMagic);
    put<std::uint32_t>(out, kModelFormatVersion);
    put<std::uint64_t>(out, text.size());
    out.append(text);
    put<std::uint64_t>(out, model.params.size());
    for (const double p : model.params) {
        put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(p));
    }
    put<std::uint64_t>(out, fnv1a(out));
    return out;
}

ModelState load_model(std::string_view bytes) {
    Reader in(bytes);
    if (in.take(kModelMagic.size(), "magic") != kModelMagic) {
        fail(ErrorKind::Format, "corrupt model stream: bad magic (not an FQS1 model file)");
    }
    const auto version = in.get<std::uint32_t>("format version");
    if (version != kModelFormatVersion) {
        fail(ErrorKind::Version,
             fmt::format("unsupported model format version {} (this build reads version {})", version,
                         kModelFormatVersion));
    }
    const auto header_len = in.get<std::uint64_t>("header length");
    const auto text = in.take(header_len, "header");
    const auto n_params = in.get<std::uint64_t>("parameter count");
    if (n_params > (bytes.size() / sizeof(double))) {
        fail(ErrorKind::Format, "corrupt model stream: truncated while reading parameters");
    }
    std::vector<double> params(n_params);
    for (auto& p : params) {
        p = std::bit_cast<double>(in.get<std::uint64_t>("parameters"));
    }
    const std::size_t body_end = in.pos();
    const auto checksum = in.get<std::uint64_t>("checksum");
    if (checksum != fnv1a(bytes.substr(0, body_end))) {
        fail(ErrorKind::Format, "corrupt model stream: checksum mismatch");
    }
    if (in.pos() != bytes.size()) {
        fail(ErrorKind::Format, "corrupt model stream: trailing bytes");
    }

    ModelState model;
    try {
        const json header = json::parse(text);
        model.config = apply_config_json(header.at("config"), ModelConfig{});
        const auto& norm = header.at("norm");
        model.norm.target_mean = array_from<kTargets>(norm.at("target_mean"));
        model.norm.target_std = array_from<kTargets>(norm.at("target_std"));
        model.norm.covariate_mean = array_from<kModelCovariates>(norm.at("covariate_mean"));
        model.norm.covariate_std = array_from<kModelCovariates>(norm.at("covariate_std"));
        for (const auto& e : header.at("log")) {
            model.log.push_back(EpochLog{e.at("epoch").get<std::size_t>(), e.at("train_loss").get<double>(),
                                         e.at("validation_loss").get<double>()});
        }
        model.best_epoch = header.at("best_epoch").get<std::size_t>();
        const auto& range = header.at("training_range");
        if (!range.is_null()) {
            model.training_range = TimeRange{HourStamp{range.at(0).get<std::int64_t>()},
                                             HourStamp{range.at(1).get<std::int64_t>()}};
        }
        const auto channels = header.at("channels").get<std::vector<std::string>>();
        if (channels.size() != kFields) {
            fail(ErrorKind::Data, "model channel count does not match the data model");
        }
        for (std::size_t c = 0; c < kFields; ++c) {
            if (channels[c] != channel_info()[c].name) {
                fail(ErrorKind::Data, fmt::format("model channel '{}' does not match data channel '{}'", channels[c],
                                                  channel_info()[c].name));
            }
        }
    } catch (const json::exception& e) {
        fail(ErrorKind::Format, fmt::format("corrupt model stream: bad header ({})", e.what()));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Data) {
            throw;
        }
        fail(ErrorKind::Format, fmt::format("corrupt model stream: {}", e.what()));
    }
    if (params.size() != param_count(model.config)) {
        fail(ErrorKind::Format, "corrupt model stream: parameter count does not match the configuration");
    }
    model.params = std::move(params);
    return model;
}

}  // namespace fqs
