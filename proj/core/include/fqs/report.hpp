#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fqs/anomaly.hpp"

namespace fqs {

/// Header of the anomaly report CSV.
std::string report_header();

/// One row per record. Unscored rows carry scored=0 and empty band cells.
std::string write_report_csv(std::span<const AnomalyRecord> records);

/// Reads a report back. Forecasts are not part of the report and stay empty.
std::vector<AnomalyRecord> parse_report_csv(std::string_view text);

/// Plot data for one channel: timestamp,observed,mean,q01,q99 for scored records.
std::string write_plot_csv(std::span<const AnomalyRecord> records, std::size_t channel);

struct PlotRow {
    HourStamp timestamp;
    double observed = 0.0;
    double mean = 0.0;
    double q01 = 0.0;
    double q99 = 0.0;
};

std::vector<PlotRow> parse_plot_csv(std::string_view text);

/// Static SVG: one panel per channel with the [q01, q99] band, predicted mean
/// and observations, plus vertical bars at anomalous timesteps. Bar intensity
/// is the score min-max normalized over the plotted records (presentation only).
std::string render_svg(std::span<const AnomalyRecord> records, std::span<const std::vector<PlotRow>> channels);

}  // namespace fqs
