#include <fmt/format.h>

#include "fqs/error.hpp"
#include "fqs/series.hpp"

namespace fqs {

bool window_valid_at(const Series& series, std::size_t label_index, std::size_t window_length) {
    if (label_index < window_length || label_index >= series.size()) {
        return false;
    }
    const auto& samples = series.samples;
    const std::size_t start = label_index - window_length;
    if (samples[label_index].timestamp - samples[start].timestamp != static_cast<std::int64_t>(window_length)) {
        return false;
    }
    if (!samples[label_index].genuine_targets()) {
        return false;
    }
    for (std::size_t i = start; i < label_index; ++i) {
        if (!samples[i].complete()) {
            return false;
        }
        if (samples[i + 1].timestamp - samples[i].timestamp != 1) {
            return false;
        }
    }
    return true;
}

std::vector<Window> build_windows(const Series& series, std::size_t window_length) {
    if (window_length < 2) {
        fail(ErrorKind::Config, fmt::format("window length must be at least 2, got {}", window_length));
    }
    const auto& samples = series.samples;
    const std::size_t n = samples.size();
    std::vector<Window> windows;
    if (n < window_length + 1) {
        return windows;
    }

    // Length of the run of usable consecutive inputs ending at index i.
    std::size_t run = 0;
    for (std::size_t label = 0; label < n; ++label) {
        if (label >= window_length && run >= window_length && samples[label].genuine_targets() &&
            samples[label].timestamp - samples[label - 1].timestamp == 1) {
            Window w;
            w.inputs = std::span<const MonitoringSample>(samples.data() + (label - window_length), window_length);
            w.label = samples[label].targets;
            w.label_time = samples[label].timestamp;
            windows.push_back(w);
        }
        if (!samples[label].complete()) {
            run = 0;
        } else if (label > 0 && run > 0 && samples[label].timestamp - samples[label - 1].timestamp == 1) {
            ++run;
        } else {
            run = 1;
        }
    }
    return windows;
}

}  // namespace fqs
