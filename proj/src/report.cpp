#include "lesiontrack/report.hpp"

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "lesiontrack/format.hpp"
#include "lesiontrack/rng.hpp"

namespace lesiontrack {
namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr std::array<Outcome, 4> kOutcomes{Outcome::Correct, Outcome::TrueNegative, Outcome::IncorrectAssignment,
                                           Outcome::FalseNegative};

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

template <typename T>
std::string opt_field(const std::optional<T>& v) {
  if (!v) return {};
  if constexpr (std::is_floating_point_v<T>) {
    return format_number(*v);
  } else {
    return std::to_string(*v);
  }
}

std::vector<std::vector<std::string>> parse_csv_rows(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      field_started = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      field_started = false;
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw Error(ErrorCode::InvalidInput, "unterminated quoted CSV field");
  if (field_started || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::optional<double> parse_opt_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw Error(ErrorCode::InvalidInput, "bad number '" + s + "'");
  return v;
}

template <typename T>
std::optional<T> parse_opt_int(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t used = 0;
  const long long v = std::stoll(s, &used);
  if (used != s.size()) throw Error(ErrorCode::InvalidInput, "bad integer '" + s + "'");
  return static_cast<T>(v);
}

bool parse_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false" || s.empty()) return false;
  throw Error(ErrorCode::InvalidInput, "bad boolean '" + s + "'");
}

ordered_json metadata_json(const RunMetadata& m, bool with_timestamp) {
  ordered_json j;
  j["command"] = m.command;
  j["config_fingerprint"] = m.config_fingerprint;
  j["segmenter"] = m.segmenter;
  j["connectivity"] = m.connectivity;
  j["pad_value"] = m.pad_value;
  j["seed"] = m.seed;
  j["tool_version"] = m.tool_version;
  if (with_timestamp) j["timestamp"] = m.timestamp;
  return j;
}

void write_json(const ordered_json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

ordered_json proportions_panel(const std::string& panel, const TimepointSummary& t, const RunMetadata& meta) {
  ordered_json j;
  j["metadata"] = metadata_json(meta, false);
  j["panel"] = panel;
  j["units"] = "proportion";
  j["total"] = t.total();
  ordered_json rows = ordered_json::array();
  for (Outcome o : kOutcomes) {
    const auto idx = static_cast<std::size_t>(o);
    rows.push_back({{"outcome", std::string(to_string(o))},
                    {"count", t.counts[idx]},
                    {"proportion", t.proportion(o)},
                    {"best_case_count", t.best_case_counts[idx]}});
  }
  j["rows"] = rows;
  return j;
}

}  // namespace

RunMetadata make_run_metadata(const ExperimentConfig& cfg, const Segmenter& segmenter, std::string command) {
  RunMetadata m;
  m.command = std::move(command);
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016" PRIx64, fnv1a64(canonical_json(cfg)));
  m.config_fingerprint = hex;
  m.segmenter = segmenter.identity();
  m.connectivity = to_int(cfg.connectivity);
  m.pad_value = cfg.voi.pad_value;
  m.seed = cfg.seed;
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char ts[32];
  std::strftime(ts, sizeof ts, "%Y-%m-%dT%H:%M:%SZ", &utc);
  m.timestamp = ts;
  return m;
}

std::string outcomes_csv(std::span<const OutcomeRecord> records) {
  std::string out(kOutcomesHeader);
  out += '\n';
  for (const auto& r : records) {
    out += csv_field(r.case_id) + ',' + std::to_string(r.lesion_id) + ',' + std::string(to_string(r.timepoint)) + ',' +
           opt_field(r.epsilon_mm) + ',' + std::string(to_string(r.outcome)) + ',' + opt_field(r.dice) + ',' +
           opt_field(r.center_distance_mm) + ',' + opt_field(r.chosen_component) + ',' + opt_field(r.matched_gt_label) +
           ',' + (r.best_case ? "true" : "false") + ',' + (r.merged ? "true" : "false") + '\n';
  }
  return out;
}

void write_outcomes_csv(std::span<const OutcomeRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << outcomes_csv(records);
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

std::vector<OutcomeRecord> parse_outcomes_csv(std::string_view text) {
  const auto rows = parse_csv_rows(text);
  if (rows.empty()) throw Error(ErrorCode::InvalidInput, "outcomes CSV is empty");
  std::string header;
  for (std::size_t i = 0; i < rows[0].size(); ++i) header += (i ? "," : "") + rows[0][i];
  if (header != kOutcomesHeader) throw Error(ErrorCode::InvalidInput, "unexpected outcomes CSV header");
  std::vector<OutcomeRecord> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() != 11) throw Error(ErrorCode::InvalidInput, "outcomes CSV row " + std::to_string(i) + " has " + std::to_string(f.size()) + " fields");
    try {
      OutcomeRecord r;
      r.case_id = f[0];
      r.lesion_id = *parse_opt_int<std::int32_t>(f[1]);
      r.timepoint = timepoint_from_string(f[2]);
      r.epsilon_mm = parse_opt_double(f[3]);
      r.outcome = outcome_from_string(f[4]);
      r.dice = parse_opt_double(f[5]);
      r.center_distance_mm = parse_opt_double(f[6]);
      r.chosen_component = parse_opt_int<int>(f[7]);
      r.matched_gt_label = parse_opt_int<std::int32_t>(f[8]);
      r.best_case = parse_bool(f[9]);
      r.merged = parse_bool(f[10]);
      if (r.outcome == Outcome::Correct) r.dice_vs_expected = r.dice;
      out.push_back(std::move(r));
    } catch (const std::logic_error& e) {
      throw Error(ErrorCode::InvalidInput, "outcomes CSV row " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

std::vector<OutcomeRecord> read_outcomes_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_outcomes_csv(ss.str());
}

void write_figure_data(const LongitudinalSummary& s, const RunMetadata& meta, const std::filesystem::path& out_dir) {
  ensure_dir(out_dir);
  {
    ordered_json j;
    j["metadata"] = metadata_json(meta, false);
    j["panel"] = "registration_error_histogram";
    j["units"] = "mm";
    j["bin_width_mm"] = s.registration_error_hist.bin_width;
    ordered_json edges = ordered_json::array();
    const auto& h = s.registration_error_hist;
    for (std::size_t i = 0; i < h.counts.size(); ++i) edges.push_back(h.lower_edge(i));
    if (!h.counts.empty()) edges.push_back(h.upper_edge(h.counts.size() - 1));
    j["bin_edges_mm"] = edges;
    j["counts"] = h.counts;
    j["n"] = h.total();
    j["values_mm"] = s.registration_errors_mm;
    write_json(j, out_dir / "fig_reg_error_hist.json");
  }
  {
    ordered_json j;
    j["metadata"] = metadata_json(meta, false);
    j["panel"] = "dice_by_timepoint";
    j["units"] = "dice";
    j["series"] = {{"baseline", s.baseline.dice}, {"followup", s.followup.dice}};
    ordered_json paired = ordered_json::array();
    for (const auto& p : s.paired_dice) {
      paired.push_back({{"lesion", p.key}, {"baseline", p.baseline_value}, {"followup", p.followup_value}});
    }
    j["paired"] = paired;
    j["excluded_from_pairing"] = s.excluded_from_pairing;
    ordered_json w;
    w["status"] = s.wilcoxon_status;
    if (s.wilcoxon) {
      w["statistic"] = s.wilcoxon->statistic;
      w["w_plus"] = s.wilcoxon->w_plus;
      w["w_minus"] = s.wilcoxon->w_minus;
      w["p_value"] = s.wilcoxon->p_value;
      w["n"] = s.wilcoxon->n;
      w["zeros_dropped"] = s.wilcoxon->zeros_dropped;
      w["method"] = s.wilcoxon->exact ? "exact" : "normal_approximation";
    }
    j["wilcoxon"] = w;
    write_json(j, out_dir / "fig_dice_by_timepoint.json");
  }
  write_json(proportions_panel("outcomes_baseline", s.baseline, meta), out_dir / "fig_outcomes_baseline.json");
  write_json(proportions_panel("outcomes_followup", s.followup, meta), out_dir / "fig_outcomes_followup.json");
}

void write_figure_data(const SweepResult& sweep, const RunMetadata& meta, const std::filesystem::path& out_dir) {
  ensure_dir(out_dir);
  {
    ordered_json j;
    j["metadata"] = metadata_json(meta, false);
    j["panel"] = "sweep_dice";
    j["units"] = {{"epsilon", "mm"}, {"dice", "dice"}};
    ordered_json rows = ordered_json::array();
    for (const auto& row : sweep.rows) {
      rows.push_back({{"epsilon_mm", row.epsilon_mm}, {"mean_dice", row.mean_dice}, {"dice", row.dice}});
    }
    j["rows"] = rows;
    ordered_json points = ordered_json::array();
    for (const auto& r : sweep.records) {
      points.push_back({{"case_id", r.case_id},
                        {"lesion_id", r.lesion_id},
                        {"epsilon_mm", *r.epsilon_mm},
                        {"dice", r.dice_vs_expected.value_or(0.0)},
                        {"outcome", std::string(to_string(r.outcome))}});
    }
    j["points"] = points;
    j["warnings"] = sweep.warnings;
    write_json(j, out_dir / "fig_sweep_dice.json");
  }
  {
    ordered_json j;
    j["metadata"] = metadata_json(meta, false);
    j["panel"] = "sweep_outcomes";
    j["units"] = {{"epsilon", "mm"}, {"value", "proportion"}};
    ordered_json rows = ordered_json::array();
    for (const auto& row : sweep.rows) {
      ordered_json r;
      r["epsilon_mm"] = row.epsilon_mm;
      r["total"] = row.total();
      for (Outcome o : kOutcomes) r[std::string(to_string(o))] = row.proportion(o);
      rows.push_back(r);
    }
    j["rows"] = rows;
    write_json(j, out_dir / "fig_sweep_outcomes.json");
  }
}

void write_run_metadata(const RunMetadata& meta, const std::filesystem::path& out_dir) {
  ensure_dir(out_dir);
  write_json(metadata_json(meta, true), out_dir / "run_metadata.json");
}

}  // namespace lesiontrack
