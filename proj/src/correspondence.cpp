#include "lesiontrack/correspondence.hpp"

#include <algorithm>
#include <string>

#include "lesiontrack/metrics.hpp"

namespace lesiontrack {

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Correct: return "Correct";
    case Outcome::TrueNegative: return "TrueNegative";
    case Outcome::IncorrectAssignment: return "IncorrectAssignment";
    case Outcome::FalseNegative: return "FalseNegative";
  }
  return "FalseNegative";
}

Outcome outcome_from_string(std::string_view s) {
  for (Outcome o : {Outcome::Correct, Outcome::TrueNegative, Outcome::IncorrectAssignment, Outcome::FalseNegative}) {
    if (to_string(o) == s) return o;
  }
  throw Error(ErrorCode::InvalidInput, "unknown outcome '" + std::string(s) + "'");
}

std::optional<Selection> select_component(const LabeledComponents& lc, WorldPoint c_voi) {
  std::optional<Selection> best;
  for (int l = 1; l <= lc.count; ++l) {
    const double d = distance(lc.centroids[l - 1], c_voi);
    if (!best || d < best->distance_mm) best = Selection{l, d};
  }
  return best;
}

OutcomeRecord classify_outcome(const std::optional<Selection>& selection, const ExpectedLesion& expected,
                               const LabeledComponents& pred, const LabelVolume& gt_instances_in_voi,
                               const OverlapTable& overlaps) {
  OutcomeRecord r;
  r.lesion_id = expected.lesion_id;

  if (!selection) {
    r.outcome = expected.present ? Outcome::FalseNegative : Outcome::TrueNegative;
    return r;
  }
  if (selection->component < 1 || selection->component > pred.count) {
    throw Error(ErrorCode::InvalidInput, "selection references unknown component " + std::to_string(selection->component));
  }
  if (!pred.labels.geometry().same_shape(gt_instances_in_voi.geometry())) {
    throw Error(ErrorCode::ShapeMismatch, "prediction and ground-truth VOIs differ");
  }
  const int s = selection->component;
  r.chosen_component = s;
  r.center_distance_mm = selection->distance_mm;

  std::int64_t best_overlap = 0;
  std::int64_t accepted_overlap = 0;
  for (auto it = overlaps.lower_bound({s, 0}); it != overlaps.end() && it->first.first == s; ++it) {
    const auto [label, shared] = std::pair{it->first.second, it->second};
    if (shared > best_overlap) {
      best_overlap = shared;
      r.matched_gt_label = label;
    }
    if (std::find(expected.accepted_labels.begin(), expected.accepted_labels.end(), label) != expected.accepted_labels.end()) {
      accepted_overlap += shared;
    }
  }

  std::int64_t expected_size = 0;
  if (expected.present) {
    for (auto v : gt_instances_in_voi.data()) {
      if (v != 0 && std::find(expected.accepted_labels.begin(), expected.accepted_labels.end(), v) != expected.accepted_labels.end()) {
        ++expected_size;
      }
    }
  }
  const std::int64_t component_size = pred.voxel_counts[s - 1];
  const double overlap_dice = dice_from_counts(accepted_overlap, component_size, expected_size);

  const bool matches = expected.present && r.matched_gt_label &&
                       std::find(expected.accepted_labels.begin(), expected.accepted_labels.end(), *r.matched_gt_label) !=
                           expected.accepted_labels.end();
  if (matches) {
    r.outcome = Outcome::Correct;
    r.dice = overlap_dice;
    r.dice_vs_expected = overlap_dice;
  } else {
    r.outcome = Outcome::IncorrectAssignment;
    if (expected.present) r.dice_vs_expected = overlap_dice;
  }
  return r;
}

}  // namespace lesiontrack
