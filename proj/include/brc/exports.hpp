#pragma once

// Run-directory outputs: state matrices, spike events, report JSON and
// plot-ready CSV curves.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "brc/config.hpp"
#include "brc/embed.hpp"
#include "brc/harness.hpp"

namespace brc {

/// Header "sample,label,replicate,day,session,stimulus_index,W_ms,ch0..chN".
void write_states_csv(const LabeledDataset& ds, const std::filesystem::path& path);
/// Reads a file written by write_states_csv; class names in first-seen order.
LabeledDataset read_states_csv(const std::filesystem::path& path);

/// "delivery,label,channel,t_sample,t_ms,peak_uV" with t_ms relative to onset.
void write_events_csv(const SessionData& s, const std::filesystem::path& path);

nlohmann::json report_json(const ExperimentReport& r, const WorkbenchConfig& cfg);
void write_report(const ExperimentReport& r, const WorkbenchConfig& cfg, const std::filesystem::path& path);

/// "W_ms,mean,std,sem,n".
void write_window_curve_csv(const std::vector<WindowPoint>& curve, const std::filesystem::path& path);
/// "day,substrate,mean,std,sem,n".
void write_cross_day_csv(const std::vector<CrossDayRow>& rows, const std::filesystem::path& path);
/// "substrate,class,mean,std,n".
void write_per_class_csv(const ExperimentReport& r, const std::filesystem::path& path);
/// "sample,label,pc1,pc2,..."
void write_embedding_csv(const Embedding& e, const std::vector<std::string>& labels,
                         const std::filesystem::path& path);

/// Writes config.json, report.json, timing.json, per-session state and event
/// files and the curve CSVs under `dir`.
void write_run(const RunOutput& run, const WorkbenchConfig& cfg, const std::filesystem::path& dir);

/// Shortest round-trip text for a double.
std::string format_double(double v);

}  // namespace brc
