#pragma once

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lesiontrack/config.hpp"
#include "lesiontrack/correspondence.hpp"
#include "lesiontrack/metrics.hpp"

namespace lesiontrack {

std::unique_ptr<Segmenter> make_segmenter(const ExperimentConfig& cfg);

/// CT plus ground-truth instances of one case at one timepoint.
struct Scan {
  IntensityVolume ct;
  LabelVolume instances;
};

/// `<data_root>/<case_id>/<timepoint>_ct.nii.gz` and `<timepoint>_instances.nii.gz`.
Scan load_scan(const std::filesystem::path& data_root, const std::string& case_id, Timepoint timepoint);

/// One pass of the pipeline: VOI extraction around `center`, segmentation,
/// connected components, nearest-to-centre selection and classification.
OutcomeRecord evaluate_voi(const Scan& scan, WorldPoint center, const ExpectedLesion& expected, const Segmenter& segmenter,
                           const ExperimentConfig& cfg, const std::string& case_id, Timepoint timepoint,
                           std::optional<double> epsilon_mm);

struct CaseError {
  std::string case_id;
  std::string message;
};

using OutcomeCounts = std::array<std::int64_t, 4>;  // indexed by Outcome

struct TimepointSummary {
  OutcomeCounts counts{};
  OutcomeCounts best_case_counts{};
  std::vector<double> dice;  // Correct outcomes, record order

  std::int64_t total() const { return counts[0] + counts[1] + counts[2] + counts[3]; }
  double proportion(Outcome o) const;
};

struct LongitudinalSummary {
  std::vector<double> registration_errors_mm;
  Histogram registration_error_hist;
  TimepointSummary baseline;
  TimepointSummary followup;
  std::vector<PairedSample> paired_dice;  // lesions Correct at both timepoints
  std::int64_t excluded_from_pairing = 0;
  std::optional<WilcoxonResult> wilcoxon;
  std::string wilcoxon_status;  // "ok" or the reason no test was possible
};

struct LongitudinalResult {
  std::vector<OutcomeRecord> records;  // sorted by (case, lesion, timepoint)
  std::vector<CaseError> case_errors;  // sorted by case
  LongitudinalSummary summary;
};

/// Experiment A. Malformed manifests abort; per-case failures are recorded and skipped.
LongitudinalResult run_longitudinal_eval(const ExperimentConfig& cfg, const Segmenter& segmenter);
LongitudinalResult run_longitudinal_eval(const ExperimentConfig& cfg);

LongitudinalSummary summarize_longitudinal(std::span<const OutcomeRecord> records,
                                           std::span<const LesionRecord> manifest,
                                           const std::vector<CaseError>& case_errors);

struct SweepRow {
  double epsilon_mm = 0.0;
  OutcomeCounts counts{};
  std::vector<double> dice;  // one per selected lesion; failed segmentations count as 0
  double mean_dice = 0.0;

  std::int64_t total() const { return counts[0] + counts[1] + counts[2] + counts[3]; }
  double proportion(Outcome o) const;
};

struct SweepResult {
  std::vector<OutcomeRecord> selected;  // the top-k reference records
  std::vector<OutcomeRecord> records;   // sorted by (case, lesion, epsilon)
  std::vector<SweepRow> rows;           // one per configured magnitude
  std::vector<std::string> warnings;
};

/// Top-k Correct records of the configured timepoint, Dice descending,
/// ties by (case, lesion). TopKUnsatisfiable when there are too few.
std::vector<OutcomeRecord> select_top_lesions(std::span<const OutcomeRecord> results, int top_k, Timepoint source);

/// Experiment B.
SweepResult run_displacement_sweep(const ExperimentConfig& cfg, std::span<const OutcomeRecord> baseline_results,
                                   const Segmenter& segmenter);
SweepResult run_displacement_sweep(const ExperimentConfig& cfg, std::span<const OutcomeRecord> baseline_results);

/// Ordering used for every emitted record list.
bool record_less(const OutcomeRecord& a, const OutcomeRecord& b);

}  // namespace lesiontrack
