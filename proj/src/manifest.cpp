#include "lesiontrack/manifest.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "lesiontrack/error.hpp"

namespace lesiontrack {
namespace {

using nlohmann::json;

constexpr std::array<std::pair<Transition, std::string_view>, 8> kTransitionNames{{
    {Transition::Stable, "stable"},
    {Transition::Grow, "grow"},
    {Transition::Shrink, "shrink"},
    {Transition::Resolve, "resolve"},
    {Transition::New, "new"},
    {Transition::Merge, "merge"},
    {Transition::Split, "split"},
    {Transition::SplitChild, "split_child"},
}};

json point_json(const std::optional<WorldPoint>& p) {
  if (!p) return nullptr;
  return json::array({p->x, p->y, p->z});
}

std::optional<WorldPoint> point_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  const json& a = j.at(key);
  if (!a.is_array() || a.size() != 3) {
    throw Error(ErrorCode::MalformedManifest, std::string(key) + " must be [x, y, z] or null");
  }
  WorldPoint p;
  for (int i = 0; i < 3; ++i) {
    if (!a[i].is_number()) throw Error(ErrorCode::MalformedManifest, std::string(key) + " must hold numbers");
    p[i] = a[i].get<double>();
  }
  return p;
}

template <typename T>
std::optional<T> optional_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

std::string_view to_string(Timepoint t) { return t == Timepoint::Baseline ? "baseline" : "followup"; }

Timepoint timepoint_from_string(std::string_view s) {
  if (s == "baseline") return Timepoint::Baseline;
  if (s == "followup") return Timepoint::Followup;
  throw Error(ErrorCode::InvalidInput, "unknown timepoint '" + std::string(s) + "'");
}

std::string_view to_string(Transition t) {
  for (const auto& [k, name] : kTransitionNames) {
    if (k == t) return name;
  }
  return "stable";
}

Transition transition_from_string(std::string_view s) {
  for (const auto& [k, name] : kTransitionNames) {
    if (name == s) return k;
  }
  throw Error(ErrorCode::InvalidInput, "unknown transition '" + std::string(s) + "'");
}

std::vector<LesionRecord> parse_manifest(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedManifest, e.what());
  }
  if (!root.is_array()) throw Error(ErrorCode::MalformedManifest, "manifest must be a JSON list");
  std::vector<LesionRecord> out;
  out.reserve(root.size());
  for (const auto& j : root) {
    try {
      LesionRecord r;
      r.case_id = j.at("case_id").get<std::string>();
      r.lesion_id = j.at("lesion_id").get<std::int32_t>();
      if (r.lesion_id < 1) throw Error(ErrorCode::MalformedManifest, "lesion_id must be >= 1");
      r.baseline_centroid_mm = point_from(j, "baseline_centroid_mm");
      r.followup_centroid_mm = point_from(j, "followup_centroid_mm");
      r.propagated_centroid_mm = point_from(j, "propagated_centroid_mm");
      r.transition = j.contains("transition") ? transition_from_string(j.at("transition").get<std::string>()) : Transition::Stable;
      r.merged_into = optional_from<std::int32_t>(j, "merged_into");
      r.parent_id = optional_from<std::int32_t>(j, "parent_id");
      r.registration_error_mm = optional_from<double>(j, "registration_error_mm");
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedManifest, e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedManifest, e.what());
    }
  }
  return out;
}

std::vector<LesionRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MalformedManifest, "cannot read manifest " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

std::string manifest_to_json(const std::vector<LesionRecord>& records) {
  json root = json::array();
  for (const auto& r : records) {
    json j;
    j["case_id"] = r.case_id;
    j["lesion_id"] = r.lesion_id;
    j["baseline_centroid_mm"] = point_json(r.baseline_centroid_mm);
    j["followup_centroid_mm"] = point_json(r.followup_centroid_mm);
    j["propagated_centroid_mm"] = point_json(r.propagated_centroid_mm);
    j["transition"] = std::string(to_string(r.transition));
    j["merged_into"] = r.merged_into ? json(*r.merged_into) : json(nullptr);
    j["parent_id"] = r.parent_id ? json(*r.parent_id) : json(nullptr);
    j["registration_error_mm"] = r.registration_error_mm ? json(*r.registration_error_mm) : json(nullptr);
    root.push_back(std::move(j));
  }
  return root.dump(2) + "\n";
}

void write_manifest(const std::vector<LesionRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << manifest_to_json(records);
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

std::vector<std::int32_t> followup_lineage(const std::vector<LesionRecord>& case_records, std::int32_t lesion_id) {
  std::vector<std::int32_t> out{lesion_id};
  for (const auto& r : case_records) {
    if (r.lesion_id == lesion_id && r.merged_into) out.push_back(*r.merged_into);
    if (r.parent_id && *r.parent_id == lesion_id) out.push_back(r.lesion_id);
  }
  return out;
}

}  // namespace lesiontrack
