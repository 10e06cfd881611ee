#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lesiontrack/labeling.hpp"
#include "lesiontrack/manifest.hpp"
#include "lesiontrack/phantom.hpp"
#include "lesiontrack/segmenter.hpp"
#include "lesiontrack/voi.hpp"

namespace lesiontrack {

enum class SegmenterKind { Synthetic, External };

struct SegmenterChoice {
  SegmenterKind kind = SegmenterKind::Synthetic;
  CenterBiasParams synthetic;
  std::filesystem::path prediction_dir;
};

struct ExperimentConfig {
  std::filesystem::path manifest_path;
  std::filesystem::path data_root;
  SegmenterChoice segmenter;
  VoiSpec voi;
  Connectivity connectivity = Connectivity::TwentySix;
  std::vector<double> magnitudes_mm = default_displacement_magnitudes();
  int top_k = 30;
  Timepoint top_k_source = Timepoint::Baseline;
  std::uint64_t seed = 0;
  int workers = 1;
  std::filesystem::path output_dir;

  /// ConfigError on violated invariants (top_k >= 1, magnitudes ascending from 0, ...).
  void validate() const;
  /// Seed and worker overrides as given on the command line.
  void apply_overrides(std::optional<std::uint64_t> seed_override, std::optional<int> workers_override);
};

/// Relative paths in the JSON resolve against `base_dir`. Unknown keys and
/// type errors are ConfigError.
ExperimentConfig parse_experiment_config(std::string_view json_text, const std::filesystem::path& base_dir);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Sorted-key JSON of everything that affects results. Excludes worker count
/// and output directory, which must not change outputs.
std::string canonical_json(const ExperimentConfig& cfg);

struct PhantomJob {
  PhantomConfig phantom;
  int n_cases = 10;
  int workers = 1;
};

PhantomJob parse_phantom_job(std::string_view json_text);
PhantomJob load_phantom_job(const std::filesystem::path& path);

}  // namespace lesiontrack
