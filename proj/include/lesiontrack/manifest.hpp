#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lesiontrack/geometry.hpp"

namespace lesiontrack {

enum class Timepoint { Baseline, Followup };

std::string_view to_string(Timepoint t);
Timepoint timepoint_from_string(std::string_view s);

enum class Transition { Stable, Grow, Shrink, Resolve, New, Merge, Split, SplitChild };

std::string_view to_string(Transition t);
Transition transition_from_string(std::string_view s);

/// One lesion of one case. Coordinates are world mm. The lesion id is also
/// the voxel value of the lesion in the case's instance-label volumes.
struct LesionRecord {
  std::string case_id;
  std::int32_t lesion_id = 0;
  std::optional<WorldPoint> baseline_centroid_mm;    // absent for new lesions and split children
  std::optional<WorldPoint> followup_centroid_mm;    // absent when the lesion resolved
  std::optional<WorldPoint> propagated_centroid_mm;  // absent when registration gave none
  Transition transition = Transition::Stable;
  std::optional<std::int32_t> merged_into;  // surviving lesion id for an absorbed lesion
  std::optional<std::int32_t> parent_id;    // baseline parent of a split child
  std::optional<double> registration_error_mm;  // drawn error magnitude (phantoms only)

  /// Lesions identified on the baseline scan are the ones the pipeline tracks.
  bool tracked() const { return baseline_centroid_mm.has_value(); }
};

/// Reads the master manifest (a JSON list). Any schema violation is MalformedManifest.
std::vector<LesionRecord> read_manifest(const std::filesystem::path& path);
std::vector<LesionRecord> parse_manifest(std::string_view json_text);
std::string manifest_to_json(const std::vector<LesionRecord>& records);
void write_manifest(const std::vector<LesionRecord>& records, const std::filesystem::path& path);

/// Instance labels in the follow-up volume that continue `lesion_id`'s
/// lineage: itself, the lesion it merged into, and its split children.
std::vector<std::int32_t> followup_lineage(const std::vector<LesionRecord>& case_records, std::int32_t lesion_id);

}  // namespace lesiontrack
