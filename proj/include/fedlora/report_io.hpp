// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fedlora/experiment.hpp"

namespace fedlora {

enum class ReportFormat { kCsv, kJson, kBoth };

ReportFormat parse_format(const std::string& name);

// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double v);

// Round-by-round log; columns: round, participants, round_time_s,
// cumulative_time_s, loss, accuracy. Participants are ';'-joined indices.
std::string report_csv(const RunReport& report);

nlohmann::json report_json(const RunReport& report);
RunReport parse_report(const nlohmann::json& summary);

// One comparison row per run: strategy, wall clock to target (empty when
// unreached), rounds executed, final loss and accuracy.
std::string sweep_csv(const std::vector<RunReport>& reports);

// Writes rounds.csv and/or summary.json under out_dir, creating it.
void emit_report(const RunReport& report, const std::filesystem::path& out_dir,
                 ReportFormat format);

nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace fedlora
