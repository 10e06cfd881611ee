#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lesiontrack/labeling.hpp"
#include "lesiontrack/manifest.hpp"

namespace lesiontrack {

enum class Outcome { Correct, TrueNegative, IncorrectAssignment, FalseNegative };

std::string_view to_string(Outcome o);
Outcome outcome_from_string(std::string_view s);

struct Selection {
  int component = 0;
  double distance_mm = 0.0;
};

/// Component whose centroid is nearest to the VOI centre; ties go to the
/// lowest component id. Empty when there are no components.
std::optional<Selection> select_component(const LabeledComponents& lc, WorldPoint c_voi);

/// What the VOI was supposed to find. `accepted_labels` are the ground-truth
/// instance labels that count as the same lesion (the lesion itself plus
/// merge and split successors at follow-up).
struct ExpectedLesion {
  std::int32_t lesion_id = 0;
  std::vector<std::int32_t> accepted_labels;
  bool present = true;  // lesion (or a successor) exists in the scan
};

struct OutcomeRecord {
  std::string case_id;
  std::int32_t lesion_id = 0;
  Timepoint timepoint = Timepoint::Baseline;
  std::optional<double> epsilon_mm;
  Outcome outcome = Outcome::FalseNegative;
  std::optional<double> dice;  // set iff outcome == Correct
  std::optional<int> chosen_component;
  std::optional<double> center_distance_mm;
  std::optional<std::int32_t> matched_gt_label;
  bool best_case = false;  // follow-up VOI centred on the true centroid (no propagation available)
  bool merged = false;
  std::optional<double> dice_vs_expected;  // diagnostic only; not part of the CSV schema

  friend bool operator==(const OutcomeRecord&, const OutcomeRecord&) = default;
};

/// Four-way classification. The selected component corresponds to the
/// expected lesion when its largest ground-truth overlap (ties: lowest
/// label) is one of the accepted labels.
OutcomeRecord classify_outcome(const std::optional<Selection>& selection, const ExpectedLesion& expected,
                               const LabeledComponents& pred, const LabelVolume& gt_instances_in_voi,
                               const OverlapTable& overlaps);

}  // namespace lesiontrack
