#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lesiontrack/experiments.hpp"

namespace lesiontrack {

inline constexpr std::string_view kToolVersion = "0.1.0";

struct RunMetadata {
  std::string command;             // "eval" or "sweep"
  std::string config_fingerprint;  // hex FNV-1a of canonical_json(cfg)
  std::string segmenter;
  int connectivity = 26;
  double pad_value = 0.0;
  std::uint64_t seed = 0;
  std::string tool_version{kToolVersion};
  std::string timestamp;  // UTC ISO-8601; only written to run_metadata.json
};

RunMetadata make_run_metadata(const ExperimentConfig& cfg, const Segmenter& segmenter, std::string command);

inline constexpr std::string_view kOutcomesHeader =
    "case_id,lesion_id,timepoint,epsilon_mm,outcome,dice,center_distance_mm,chosen_component,matched_gt_label,best_case,merged";

/// One row per record under kOutcomesHeader; RFC-4180 quoting, empty field for null.
std::string outcomes_csv(std::span<const OutcomeRecord> records);
void write_outcomes_csv(std::span<const OutcomeRecord> records, const std::filesystem::path& path);

/// Inverse of outcomes_csv. InvalidInput on a wrong header or malformed row.
std::vector<OutcomeRecord> parse_outcomes_csv(std::string_view text);
std::vector<OutcomeRecord> read_outcomes_csv(const std::filesystem::path& path);

// Figure panels. Every file carries a "metadata" object (RunMetadata without
// the timestamp, so identical runs give identical bytes).
void write_figure_data(const LongitudinalSummary& summary, const RunMetadata& meta, const std::filesystem::path& out_dir);
void write_figure_data(const SweepResult& sweep, const RunMetadata& meta, const std::filesystem::path& out_dir);
void write_run_metadata(const RunMetadata& meta, const std::filesystem::path& out_dir);

}  // namespace lesiontrack
